#pragma once

// Demonstration solver: simulated annealing on a symmetric TSP instance.
//
// The cooling schedule follows the classic SANN scheme: the temperature is
// held for `steps_per_temperature` evaluations and set to
//   T_k = T0 / log(floor((k - 1) / steps) * steps + e).
// Moves reverse a random tour segment (2-opt); city 0 stays fixed.
// A run returns the length of the best tour found.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "algocmp/errors.hpp"
#include "algocmp/random.hpp"

namespace algocmp {

class DistanceMatrix {
public:
    DistanceMatrix() = default;

    explicit DistanceMatrix(std::vector<std::vector<double>> rows) : n_(rows.size()) {
        if (n_ < 4) throw DomainError("TSP instance needs at least 4 cities");
        data_.reserve(n_ * n_);
        for (const auto& row : rows) {
            if (row.size() != n_) throw DomainError("distance matrix must be square");
            for (double v : row) {
                if (!std::isfinite(v) || v < 0.0) throw DomainError("distances must be finite and >= 0");
                data_.push_back(v);
            }
        }
    }

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Cities uniform in a side x side square, Euclidean distances.
inline DistanceMatrix make_random_tsp(std::size_t n_cities, std::uint64_t seed,
                                      double side = 4000.0) {
    PhiloxStream rng(seed);
    std::vector<double> xs(n_cities), ys(n_cities);
    for (std::size_t i = 0; i < n_cities; ++i) {
        xs[i] = side * rng.uniform01();
        ys[i] = side * rng.uniform01();
    }
    std::vector<std::vector<double>> rows(n_cities, std::vector<double>(n_cities, 0.0));
    for (std::size_t i = 0; i < n_cities; ++i) {
        for (std::size_t j = 0; j < n_cities; ++j) rows[i][j] = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
    }
    return DistanceMatrix(std::move(rows));
}

inline double tour_length(const DistanceMatrix& m, const std::vector<std::size_t>& tour) {
    double total = 0.0;
    for (std::size_t i = 0; i < tour.size(); ++i) total += m(tour[i], tour[(i + 1) % tour.size()]);
    return total;
}

struct AnnealingParams {
    double temperature = 2000.0;
    int budget = 10000;
    int steps_per_temperature = 10;
};

inline double anneal_tsp(const DistanceMatrix& m, const AnnealingParams& params,
                         std::uint64_t seed) {
    if (!(params.temperature > 0.0)) throw DomainError("annealing temperature must be positive");
    if (params.budget < 1 || params.steps_per_temperature < 1) {
        throw DomainError("annealing budget and steps per temperature must be positive");
    }
    const std::size_t n = m.size();
    PhiloxStream rng(seed);
    std::vector<std::size_t> tour(n);
    std::iota(tour.begin(), tour.end(), std::size_t{0});
    double current = tour_length(m, tour);
    double best = current;
    const int steps = params.steps_per_temperature;
    for (int k = 1; k <= params.budget; ++k) {
        const double t = params.temperature /
                         std::log(static_cast<double>(((k - 1) / steps) * steps) + std::numbers::e);
        // Reverse tour[i..j], 1 <= i < j <= n - 1.
        std::size_t i = 1 + rng.uniform_index(n - 1);
        std::size_t j = 1 + rng.uniform_index(n - 2);
        if (j >= i) ++j;
        if (i > j) std::swap(i, j);
        const std::size_t before = tour[i - 1];
        const std::size_t after = tour[(j + 1) % n];
        const double delta = m(before, tour[j]) + m(tour[i], after) - m(before, tour[i]) -
                             m(tour[j], after);
        if (delta <= 0.0 || rng.uniform01() < std::exp(-delta / t)) {
            std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(i),
                         tour.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            current += delta;
            if (current < best) best = current;
        }
    }
    return best;
}

}  // namespace algocmp
