#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cpapml {

// splitmix64 finalizer; used to derive child seeds from (master, path...) so
// that every random stream is addressed by a fixed counter path and never by
// thread scheduling.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return std::mt19937_64(derive_seed(master, path));
}

}  // namespace cpapml
