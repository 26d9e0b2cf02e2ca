#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "features/embedding.hpp"

namespace tilecurate::features {

/// Principal axes of mean-centred data. Rows of `components` are unit
/// eigenvectors of the (n - 1)-normalised sample covariance, by descending
/// eigenvalue; each row's largest-magnitude coordinate is positive (the
/// first such coordinate on ties).
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // out_dim x in_dim
  Eigen::VectorXd variances;   // explained variance per component
  double total_variance = 0.0;
  std::size_t fit_rows = 0;

  std::size_t in_dim() const { return static_cast<std::size_t>(components.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(components.rows()); }
  double explained_ratio(std::size_t k) const {
    return total_variance > 0.0 ? variances[static_cast<Eigen::Index>(k)] / total_variance : 0.0;
  }
  bool operator==(const PcaModel& o) const {
    return mean == o.mean && components == o.components && variances == o.variances &&
           total_variance == o.total_variance && fit_rows == o.fit_rows;
  }
};

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m);

PcaModel pca_fit(const EmbeddingMatrix& data, std::size_t out_dim);
PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t out_dim);

/// (x - mean) * components^T, row by row; the result is tagged `stage`.
EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& data, Stage stage = Stage::Reduced);

/// First two principal coordinates of `reduced` (a fresh fit on that matrix).
EmbeddingMatrix project_2d(const EmbeddingMatrix& reduced);

/// Store container with named f64 sections: mean, components, variances, and
/// a scalar section holding (total_variance, fit_rows).
void save_pca(const std::filesystem::path& path, const PcaModel& model);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace tilecurate::features
