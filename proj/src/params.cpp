#include "xmsmo/params.hpp"

#include "xmsmo/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace xmsmo {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr const char* kDims = "model.dims";

struct RowWriter {
  std::vector<double> values;

  void matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  }
  void vector(const Vector& v) { values.insert(values.end(), v.data(), v.data() + v.size()); }
  void scalar(double v) { values.push_back(v); }

  void cell(const GruCellT<double>& g) {
    matrix(g.w_update), matrix(g.w_reset), matrix(g.w_candidate);
    matrix(g.u_update), matrix(g.u_reset), matrix(g.u_candidate);
    vector(g.b_update), vector(g.b_reset), vector(g.b_candidate);
  }
  void gru(const GruParams& g) {
    cell(g.forward);
    cell(g.backward);
    matrix(g.guidance);
  }
  void gat(const GatParams& g) {
    matrix(g.weight);
    vector(g.attention);
    scalar(g.leaky_slope);
  }
};

class RowReader {
 public:
  RowReader(const EmbeddingMatrix& file, const std::string& id) : id_(id) {
    auto row = file.find(id);
    require(bool(row), ErrorKind::Config, "parameter file lacks id '" + id + "'");
    const auto data = file.data().row(*row);
    require(data.size() >= 1, ErrorKind::Config, "parameter row '" + id + "' is empty");
    const double count = data(0);
    require(count >= 0 && count == std::floor(count) && count < double(data.size()),
            ErrorKind::Config, "parameter row '" + id + "' has a bad payload count");
    count_ = Eigen::Index(count);
    for (Eigen::Index i = 1 + count_; i < data.size(); ++i) {
      require(data(i) == 0.0f, ErrorKind::Config, "parameter row '" + id + "' has nonzero padding");
    }
    payload_ = data.segment(1, count_).transpose().cast<double>();
  }

  Eigen::Index count() const { return count_; }

  void expect(Eigen::Index n) const {
    require(count_ == n, ErrorKind::Config,
            "parameter row '" + id_ + "' holds " + std::to_string(count_) + " values, expected " +
                std::to_string(n));
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = payload_(cursor_++);
    return m;
  }
  Vector vector(Eigen::Index n) {
    Vector v = payload_.segment(cursor_, n);
    cursor_ += n;
    return v;
  }
  double scalar() { return payload_(cursor_++); }

  GruCellT<double> cell(Eigen::Index in, Eigen::Index h) {
    GruCellT<double> g;
    g.w_update = matrix(h, in), g.w_reset = matrix(h, in), g.w_candidate = matrix(h, in);
    g.u_update = matrix(h, h), g.u_reset = matrix(h, h), g.u_candidate = matrix(h, h);
    g.b_update = vector(h), g.b_reset = vector(h), g.b_candidate = vector(h);
    return g;
  }

 private:
  std::string id_;
  Eigen::Index count_ = 0;
  Eigen::Index cursor_ = 0;
  Vector payload_;
};

Eigen::Index gru_count(Eigen::Index in, Eigen::Index h, Eigen::Index d) {
  return 2 * (3 * h * in + 3 * h * h + 3 * h) + h * d;
}

GruParams read_gru(const EmbeddingMatrix& file, const std::string& id, Eigen::Index in,
                   Eigen::Index h, Eigen::Index d) {
  RowReader reader(file, id);
  reader.expect(gru_count(in, h, d));
  GruParams g;
  g.forward = reader.cell(in, h);
  g.backward = reader.cell(in, h);
  g.guidance = reader.matrix(h, d);
  return g;
}

GatParams read_gat(const EmbeddingMatrix& file, const std::string& id, Eigen::Index d) {
  RowReader reader(file, id);
  reader.expect(d * d + 2 * d + 1);
  GatParams g;
  g.weight = reader.matrix(d, d);
  g.attention = reader.vector(2 * d);
  g.leaky_slope = reader.scalar();
  return g;
}

PoolParams read_gpo(const EmbeddingMatrix& file, const std::string& id) {
  RowReader reader(file, id);
  return {reader.vector(reader.count())};
}

LinearParamsT<double> read_linear(const EmbeddingMatrix& file, const std::string& id,
                                  Eigen::Index h) {
  RowReader reader(file, id);
  reader.expect(4 * h + 1);
  LinearParamsT<double> l;
  l.weight = reader.vector(4 * h);
  l.bias = reader.scalar();
  return l;
}

}  // namespace

ModelParams ModelParams::defaults(Eigen::Index dim, Eigen::Index hidden) {
  require(dim >= 1 && hidden >= 1, ErrorKind::InvalidArgument, "model dims must be positive");
  ModelParams p;
  p.dim = dim;
  p.hidden = hidden;
  p.gat_scene = p.gat_sentence = p.gat_global = GatParams::identity(dim);
  p.visual = p.textual = DecoderParams::zeros(dim, hidden);
  return p;
}

ModelParams ModelParams::zeros(Eigen::Index dim, Eigen::Index hidden) {
  ModelParams p = defaults(dim, hidden);
  const GatParams zero_gat{Matrix::Zero(dim, dim), Vector::Zero(2 * dim), 0.0};
  p.gat_scene = p.gat_sentence = p.gat_global = zero_gat;
  return p;
}

ModelParams params_from_matrix(const EmbeddingMatrix& file) {
  RowReader dims(file, kDims);
  dims.expect(2);
  const double d = dims.scalar(), h = dims.scalar();
  require(d >= 1 && h >= 1 && d == std::floor(d) && h == std::floor(h), ErrorKind::Config,
          "model.dims must hold two positive integers");

  ModelParams p;
  p.dim = Eigen::Index(d);
  p.hidden = Eigen::Index(h);
  const Eigen::Index D = p.dim, H = p.hidden;
  p.gpo_scene = read_gpo(file, "gpo.scene");
  p.gpo_video = read_gpo(file, "gpo.video");
  p.gpo_sentence = read_gpo(file, "gpo.sentence");
  p.gpo_document = read_gpo(file, "gpo.document");
  p.gat_scene = read_gat(file, "gat.scene", D);
  p.gat_sentence = read_gat(file, "gat.sentence", D);
  p.gat_global = read_gat(file, "gat.global", D);
  p.visual.local = read_gru(file, "gru.scene", D, H, D);
  p.visual.level = read_gru(file, "gru.video", D, H, D);
  p.visual.global = read_gru(file, "gru.video.global", 2 * H, H, D);
  p.visual.linear = read_linear(file, "linear.frame", H);
  p.textual.local = read_gru(file, "gru.sentence", D, H, D);
  p.textual.level = read_gru(file, "gru.document", D, H, D);
  p.textual.global = read_gru(file, "gru.document.global", 2 * H, H, D);
  p.textual.linear = read_linear(file, "linear.word", H);
  return p;
}

EmbeddingMatrix params_to_matrix(const ModelParams& p) {
  std::vector<std::pair<std::string, RowWriter>> rows;
  auto add = [&](const std::string& id) -> RowWriter& { return rows.emplace_back(id, RowWriter{}).second; };

  RowWriter& dims = add(kDims);
  dims.scalar(double(p.dim));
  dims.scalar(double(p.hidden));
  add("gpo.scene").vector(p.gpo_scene.weights);
  add("gpo.video").vector(p.gpo_video.weights);
  add("gpo.sentence").vector(p.gpo_sentence.weights);
  add("gpo.document").vector(p.gpo_document.weights);
  add("gat.scene").gat(p.gat_scene);
  add("gat.sentence").gat(p.gat_sentence);
  add("gat.global").gat(p.gat_global);
  add("gru.scene").gru(p.visual.local);
  add("gru.video").gru(p.visual.level);
  add("gru.video.global").gru(p.visual.global);
  add("gru.sentence").gru(p.textual.local);
  add("gru.document").gru(p.textual.level);
  add("gru.document.global").gru(p.textual.global);
  RowWriter& frame = add("linear.frame");
  frame.vector(p.visual.linear.weight);
  frame.scalar(p.visual.linear.bias);
  RowWriter& word = add("linear.word");
  word.vector(p.textual.linear.weight);
  word.scalar(p.textual.linear.bias);

  std::size_t width = 0;
  for (const auto& [id, row] : rows) width = std::max(width, row.values.size() + 1);
  RowMatrixXf data = RowMatrixXf::Zero(Eigen::Index(rows.size()), Eigen::Index(width));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back(rows[i].first);
    const auto& values = rows[i].second.values;
    data(Eigen::Index(i), 0) = float(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) data(Eigen::Index(i), Eigen::Index(j + 1)) = float(values[j]);
  }
  return EmbeddingMatrix(std::move(ids), std::move(data));
}

ModelParams load_model_params(const std::filesystem::path& path) {
  return params_from_matrix(read_embeddings(path));
}

void save_model_params(const ModelParams& params, const std::filesystem::path& path) {
  write_embeddings(params_to_matrix(params), path);
}

}  // namespace xmsmo
