#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace motionlm {

// 64-bit FNV-1a; used for config and checkpoint integrity digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string digest_hex(std::string_view bytes);

}  // namespace motionlm
