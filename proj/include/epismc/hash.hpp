#pragma once

#include <cstdint>
#include <string>

namespace epismc {

// FNV-1a 64-bit, used for output manifests and checkpoint integrity
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t h);

}  // namespace epismc
