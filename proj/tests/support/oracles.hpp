#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tilecurate::testing {

/// Minimum inertia over every partition of `points` into exactly k nonempty
/// groups (exhaustive; k^n assignments).
double brute_force_inertia(const std::vector<std::vector<double>>& points, int k);

struct Eigenpairs {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

/// Cyclic Jacobi rotations on a dense symmetric matrix.
Eigenpairs jacobi_eigen(std::vector<std::vector<double>> a, double tol = 1e-15, int max_sweeps = 100);

struct PcaOracle {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;
  std::vector<double> variances;
};

/// Sample covariance (N-1) + Jacobi; each component's largest-magnitude
/// coordinate is made positive (first on ties).
PcaOracle pca_oracle(const std::vector<std::vector<double>>& rows, int out_dim);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Pixel-walk confusion counts for a tile grid against a binary mask.
Confusion confusion_oracle(const std::vector<std::optional<std::string>>& cells, int rows, int cols,
                           const std::vector<unsigned char>& mask, int tile_px, const std::string& positive,
                           double coverage);

/// Base-2 entropy of one group's class counts divided by log2(V).
double entropy_oracle(const std::vector<std::size_t>& counts, std::size_t classes);

}  // namespace tilecurate::testing
