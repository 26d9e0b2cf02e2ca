#include "features/pca.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <map>
#include <string>

#include "common/binio.hpp"
#include "common/error.hpp"

namespace tilecurate::features {

namespace {

constexpr std::uint8_t kPcaTag = 0x50;  // distinguishes a model file from an embedding store

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

}  // namespace

Eigen::MatrixXd to_eigen(const EmbeddingMatrix& m) {
  Eigen::MatrixXd out(m.rows, m.dim);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.dim; ++c) out(r, c) = m.values[r * m.dim + c];
  return out;
}

PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t out_dim) {
  const auto rows = static_cast<std::size_t>(data.rows());
  const auto dim = static_cast<std::size_t>(data.cols());
  require(out_dim >= 1, ErrorKind::Config, "pca_dim must be at least 1");
  require(out_dim <= dim, ErrorKind::Config,
          "pca_dim " + std::to_string(out_dim) + " exceeds the input dimension " + std::to_string(dim));
  require(rows >= out_dim && rows >= 2, ErrorKind::Config,
          "PCA needs at least pca_dim rows: got " + std::to_string(rows) + " rows for pca_dim " +
              std::to_string(out_dim) + "; choose a smaller pca_dim");
  PcaModel model;
  model.fit_rows = rows;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  model.total_variance = cov.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  require(solver.info() == Eigen::Success, ErrorKind::Contract, "PCA eigendecomposition failed");
  model.components.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(dim));
  model.variances.resize(static_cast<Eigen::Index>(out_dim));
  for (std::size_t k = 0; k < out_dim; ++k) {
    const Eigen::Index src = static_cast<Eigen::Index>(dim - 1 - k);  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    fix_sign(v);
    model.components.row(static_cast<Eigen::Index>(k)) = v.transpose();
    model.variances[static_cast<Eigen::Index>(k)] = std::max(0.0, solver.eigenvalues()[src]);
  }
  return model;
}

PcaModel pca_fit(const EmbeddingMatrix& data, std::size_t out_dim) {
  data.validate();
  return pca_fit(to_eigen(data), out_dim);
}

EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& data, Stage stage) {
  require(data.dim == model.in_dim(), ErrorKind::Contract,
          "PCA model expects dim " + std::to_string(model.in_dim()) + ", got " + std::to_string(data.dim));
  const Eigen::MatrixXd centered = to_eigen(data).rowwise() - model.mean.transpose();
  const Eigen::MatrixXd projected = centered * model.components.transpose();
  EmbeddingMatrix out(stage, data.rows, model.out_dim());
  out.tile_ids = data.tile_ids;
  for (std::size_t r = 0; r < data.rows; ++r)
    for (std::size_t c = 0; c < out.dim; ++c)
      out.values[r * out.dim + c] =
          static_cast<float>(projected(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  return out;
}

EmbeddingMatrix project_2d(const EmbeddingMatrix& reduced) {
  require(reduced.rows >= 2, ErrorKind::Contract, "2-D projection needs at least 2 rows");
  require(reduced.dim >= 2, ErrorKind::Contract, "2-D projection needs at least 2 columns");
  return pca_transform(pca_fit(reduced, 2), reduced, Stage::Projected);
}

namespace {

void write_section(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) binio::write_le<double>(out, m(r, c));
}

}  // namespace

void save_pca(const std::filesystem::path& path, const PcaModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(kStoreMagic, 4);
  binio::write_le<std::uint32_t>(out, kStoreVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.out_dim()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.in_dim()));
  binio::write_le<std::uint8_t>(out, kPcaTag);
  binio::write_le<std::uint32_t>(out, 4);
  write_section(out, "mean", model.mean.transpose());
  write_section(out, "components", model.components);
  write_section(out, "variances", model.variances.transpose());
  Eigen::MatrixXd scalars(1, 2);
  scalars << model.total_variance, static_cast<double>(model.fit_rows);
  write_section(out, "scalars", scalars);
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  require(in && std::equal(magic, magic + 4, kStoreMagic), ErrorKind::Io, path.string() + ": bad magic");
  require(binio::read_le<std::uint32_t>(in) == kStoreVersion, ErrorKind::Io, path.string() + ": bad version");
  const auto out_dim = binio::read_le<std::uint32_t>(in);
  const auto in_dim = binio::read_le<std::uint32_t>(in);
  require(binio::read_le<std::uint8_t>(in) == kPcaTag, ErrorKind::Io, path.string() + ": not a PCA model");
  const auto count = binio::read_le<std::uint32_t>(in);
  std::map<std::string, Eigen::MatrixXd> sections;
  for (std::uint32_t s = 0; s < count; ++s) {
    std::string name(binio::read_le<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto r = binio::read_le<std::uint32_t>(in);
    const auto c = binio::read_le<std::uint32_t>(in);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = binio::read_le<double>(in);
    sections[name] = std::move(m);
  }
  for (const char* name : {"mean", "components", "variances", "scalars"})
    require(sections.count(name), ErrorKind::Io, path.string() + ": missing section " + name);
  PcaModel model;
  model.mean = sections["mean"].row(0).transpose();
  model.components = sections["components"];
  model.variances = sections["variances"].row(0).transpose();
  model.total_variance = sections["scalars"](0, 0);
  model.fit_rows = static_cast<std::size_t>(sections["scalars"](0, 1));
  require(model.out_dim() == out_dim && model.in_dim() == in_dim &&
              static_cast<std::size_t>(model.mean.size()) == in_dim &&
              static_cast<std::size_t>(model.variances.size()) == out_dim,
          ErrorKind::Io, path.string() + ": inconsistent section shapes");
  return model;
}

}  // namespace tilecurate::features
