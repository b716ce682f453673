#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "evtwin/csv.hpp"

namespace evtwin {

// FNV-1a 64-bit; used for manifest input digests and model artifact identity.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::string file_digest_hex(const std::string& path) {
    return to_hex(fnv1a64(csv::read_file(path)));
}

}  // namespace evtwin
