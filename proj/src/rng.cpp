#include "mixdag/rng.hpp"

#include "mixdag/normal.hpp"

namespace mixdag {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t hash_label(std::uint64_t h, std::string_view label) {
    // FNV-1a folded into the running key
    std::uint64_t f = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        f ^= c;
        f *= 0x100000001b3ULL;
    }
    return mix64(h ^ mix64(f));
}

std::uint64_t derive(std::uint64_t base, std::string_view label,
                     std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = hash_label(mix64(base + kGamma), label);
    for (std::uint64_t id : ids) h = mix64(h ^ mix64(id + kGamma));
    return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

Rng Rng::stream(std::uint64_t seed, std::string_view label,
                std::initializer_list<std::uint64_t> ids) {
    return Rng(derive(seed, label, ids));
}

Rng Rng::child(std::string_view label, std::initializer_list<std::uint64_t> ids) const {
    return Rng(derive(key_, label, ids));
}

Rng::result_type Rng::operator()() {
    ++counter_;
    return mix64(key_ ^ mix64(counter_ * kGamma));
}

double Rng::uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return std_normal_quantile(uniform()); }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // rejection to remove modulo bias
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
        x = (*this)();
    } while (x >= limit);
    return x % n;
}

}  // namespace mixdag
