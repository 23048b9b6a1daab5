#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace coffee {

// FNV-1a 64-bit content hash used to tag datasets, models and spaces.
class Fingerprint {
public:
    Fingerprint& update(std::string_view bytes);
    Fingerprint& update(double value);
    Fingerprint& update(std::uint64_t value);

    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace coffee
