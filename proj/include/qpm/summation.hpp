#pragma once

#include <cmath>

namespace qpm {

/// Neumaier's variant of Kahan summation; also correct when the addend exceeds the running sum.
class CompensatedSum {
public:
    void add(double value) noexcept
    {
        double const t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            compensation_ += (sum_ - t) + value;
        else
            compensation_ += (value - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double value) noexcept
    {
        add(value);
        return *this;
    }

    /// Folds another partial sum in. Deterministic for a fixed merge order.
    void merge(CompensatedSum const& other) noexcept
    {
        add(other.sum_);
        add(other.compensation_);
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace qpm
