#include "coffee/fingerprint.hpp"

#include <bit>
#include <cstdio>

namespace coffee {

Fingerprint& Fingerprint::update(std::string_view bytes) {
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= 0x100000001b3ULL;
    }
    // Length terminator keeps ("ab","c") distinct from ("a","bc").
    return update(static_cast<std::uint64_t>(bytes.size()));
}

Fingerprint& Fingerprint::update(std::uint64_t value) {
    for (int shift = 0; shift < 64; shift += 8) {
        state_ ^= (value >> shift) & 0xffU;
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

Fingerprint& Fingerprint::update(double value) {
    if (value == 0.0) value = 0.0;  // fold -0.0
    return update(std::bit_cast<std::uint64_t>(value));
}

std::string Fingerprint::hex() const {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(state_));
    return buffer;
}

}  // namespace coffee
