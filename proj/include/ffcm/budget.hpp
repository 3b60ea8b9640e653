#pragma once

// Enumeration budget: every sum/integral/count charges one unit per character
// (or form) evaluation and fails deterministically when the limit is hit.
// The default limit is 1e8 evaluations, overridable via FFCM_BUDGET or config.

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ffcm {

struct budget_error : std::runtime_error {
    std::uint64_t used, limit;
    budget_error(std::uint64_t used_, std::uint64_t limit_)
        : std::runtime_error("enumeration budget exceeded: " + std::to_string(used_) + " of "
                             + std::to_string(limit_) + " character evaluations"),
          used(used_), limit(limit_) {}
};

class Budget {
public:
    static constexpr std::uint64_t default_limit = 100000000;  // 1e8

    explicit Budget(std::uint64_t limit = from_env()) : limit_(limit) {}

    void charge(std::uint64_t n = 1) {
        used_ += n;
        if (used_ > limit_) throw budget_error(used_, limit_);
    }
    // check affordability up front so partial work is not wasted
    void require(std::uint64_t n) const {
        if (used_ + n > limit_) throw budget_error(used_ + n, limit_);
    }
    std::uint64_t used() const { return used_; }
    std::uint64_t limit() const { return limit_; }
    void reset() { used_ = 0; }

    static std::uint64_t from_env() {
        if (const char* s = std::getenv("FFCM_BUDGET")) {
            char* end = nullptr;
            unsigned long long v = std::strtoull(s, &end, 10);
            if (end && *end == '\0' && v > 0) return v;
            throw std::invalid_argument("FFCM_BUDGET must be a positive integer");
        }
        return default_limit;
    }

private:
    std::uint64_t used_ = 0;
    std::uint64_t limit_;
};

} // namespace ffcm
