#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace helios::doe {

struct Factor {
  std::string name;
  std::vector<double> levels;
};

// 3 factors at 3 levels in 9 runs; each run stores a level index per factor.
struct LatinSquareDesign {
  std::array<std::string, 3> factors;
  std::array<std::array<double, 3>, 3> levels{};
  std::vector<std::array<std::size_t, 3>> runs;

  std::array<double, 3> values(std::size_t run) const {
    const auto& r = runs.at(run);
    return {levels[0][r[0]], levels[1][r[1]], levels[2][r[2]]};
  }
};

// Canonical square: run (i, j) takes levels (i, j, (i - j) mod 3). A seed
// permutes each factor's level order, which keeps the Latin property.
inline LatinSquareDesign latin_square(const std::vector<Factor>& factors,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
  if (factors.size() != 3) throw std::invalid_argument("latin_square: exactly 3 factors are required");
  LatinSquareDesign d;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto& lv = factors[f].levels;
    if (lv.size() != 3) {
      throw std::invalid_argument("latin_square: factor " + factors[f].name + " needs exactly 3 levels");
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        if (lv[a] == lv[b]) {
          throw std::invalid_argument("latin_square: factor " + factors[f].name + " has repeated levels");
        }
      }
    }
    d.factors[f] = factors[f].name;
    std::copy(lv.begin(), lv.end(), d.levels[f].begin());
  }

  std::array<std::array<std::size_t, 3>, 3> perm{{{0, 1, 2}, {0, 1, 2}, {0, 1, 2}}};
  if (seed) {
    std::mt19937_64 rng(*seed);
    for (auto& p : perm) std::shuffle(p.begin(), p.end(), rng);
  }
  d.runs.reserve(9);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t k = (i + 3 - j) % 3;
      d.runs.push_back({perm[0][i], perm[1][j], perm[2][k]});
    }
  }
  return d;
}

}  // namespace helios::doe
