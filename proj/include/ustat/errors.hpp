#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ustat {

// A precondition or numeric condition the library declines to work under.
class Refusal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An exact enumeration would exceed the configured tuple budget.
class BudgetExceeded : public Refusal {
public:
    BudgetExceeded(const std::string& what, double required, double limit)
        : Refusal(what + ": needs " + std::to_string(required) + " tuples, limit " +
                  std::to_string(limit)),
          required_(required), limit_(limit) {}
    double required() const { return required_; }
    double limit() const { return limit_; }

private:
    double required_;
    double limit_;
};

inline constexpr double kEnumerationGuard = 1e7;

}  // namespace ustat
