#include "ncp/digest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace ncp {

namespace {

const EVP_MD* evp_md(DigestAlgorithm algo) {
  switch (algo) {
    case DigestAlgorithm::kMd5:
      return EVP_md5();
    case DigestAlgorithm::kSha1:
      return EVP_sha1();
    case DigestAlgorithm::kSha256:
      return EVP_sha256();
  }
  throw std::invalid_argument("unsupported digest algorithm");
}

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string_view to_string(DigestAlgorithm algo) {
  switch (algo) {
    case DigestAlgorithm::kMd5:
      return "md5";
    case DigestAlgorithm::kSha1:
      return "sha1";
    case DigestAlgorithm::kSha256:
      return "sha256";
  }
  return "?";
}

DigestAlgorithm parse_digest_algorithm(std::string_view name) {
  if (name == "md5") return DigestAlgorithm::kMd5;
  if (name == "sha1") return DigestAlgorithm::kSha1;
  if (name == "sha256") return DigestAlgorithm::kSha256;
  throw std::invalid_argument("unsupported digest algorithm: " + std::string(name));
}

std::size_t digest_bits(DigestAlgorithm algo) {
  return static_cast<std::size_t>(EVP_MD_get_size(evp_md(algo))) * 8;
}

std::vector<std::uint8_t> digest(DigestAlgorithm algo, std::span<const std::uint8_t> input) {
  std::vector<std::uint8_t> out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (EVP_Digest(input.data(), input.size(), out.data(), &len, evp_md(algo), nullptr) != 1) {
    throw std::runtime_error("digest computation failed");
  }
  out.resize(len);
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace ncp
