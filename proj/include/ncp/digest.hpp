#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncp {

enum class DigestAlgorithm { kMd5, kSha1, kSha256 };

std::string_view to_string(DigestAlgorithm algo);
DigestAlgorithm parse_digest_algorithm(std::string_view name);  // "md5", "sha1", "sha256"

// Digest length in bits.
std::size_t digest_bits(DigestAlgorithm algo);

std::vector<std::uint8_t> digest(DigestAlgorithm algo, std::span<const std::uint8_t> input);

std::string to_hex(std::span<const std::uint8_t> bytes);
// Accepts upper- or lowercase; throws std::invalid_argument on bad input.
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace ncp
