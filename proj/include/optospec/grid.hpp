#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace optospec {

// Ordered set of angular frequencies (rad/s), strictly increasing and finite.
struct FrequencyGrid {
    std::vector<double> points;

    FrequencyGrid() = default;

    explicit FrequencyGrid(std::vector<double> pts) : points(std::move(pts)) {
        validate();
    }

    static FrequencyGrid linspace(double w_min, double w_max, std::size_t n) {
        if (n < 2) throw std::invalid_argument("FrequencyGrid: need at least 2 points");
        if (!(w_min < w_max)) throw std::invalid_argument("FrequencyGrid: w_min must be < w_max");
        std::vector<double> pts(n);
        const double step = (w_max - w_min) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i)
            pts[i] = w_min + step * static_cast<double>(i);
        pts.back() = w_max;
        return FrequencyGrid(std::move(pts));
    }

    void validate() const {
        if (points.empty()) throw std::invalid_argument("FrequencyGrid: empty");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i]))
                throw std::invalid_argument("FrequencyGrid: non-finite point");
            if (i > 0 && !(points[i] > points[i - 1]))
                throw std::invalid_argument("FrequencyGrid: not strictly increasing");
        }
    }

    std::size_t size() const { return points.size(); }
    bool all_positive() const { return points.front() > 0.0; }
};

} // namespace optospec
