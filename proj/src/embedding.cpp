#include "lba/embedding.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace lba {

namespace {

constexpr std::uint64_t kConceptTag = 0xc0ffee01;
constexpr std::uint64_t kProjectionTag = 0x9e0f0001;
constexpr const char* kCheckpointMagic = "lba-projection v1";

}  // namespace

Projection make_projection(Eigen::Index raw_dim, Eigen::Index dim, std::uint64_t seed,
                           double noise, double temperature) {
  if (raw_dim <= 0 || dim <= 0) throw Error("projection dimensions must be positive");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  Projection p;
  p.weights = Matrix::Identity(dim, raw_dim);
  p.temperature = temperature;
  if (noise > 0.0) {
    std::mt19937_64 rng(derive_seed(seed, kProjectionTag));
    std::normal_distribution<double> gauss(0.0, noise);
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < raw_dim; ++c) p.weights(r, c) += gauss(rng);
    }
  }
  return p;
}

ConceptTable::ConceptTable(std::uint64_t seed, Eigen::Index dim) : seed_(seed), dim_(dim) {
  if (dim <= 0) throw Error("concept dimension must be positive");
}

Vector ConceptTable::vector(std::string_view relation, std::string_view tail) const {
  const std::string key = normalize_text(relation) + '\t' + normalize_text(tail);
  std::mt19937_64 rng(derive_seed(seed_, kConceptTag, stable_hash(key)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim_);
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim_; ++i) v[i] = gauss(rng);
    n = v.norm();
  } while (n == 0.0);
  return v / n;
}

Vector ConceptTable::encode(const MaskedTriplet& m) const {
  if (m.tail_masked()) throw Error("knowledge feature undefined for fully masked pattern");
  return vector(m.relation, *m.tail);
}

Matrix ConceptTable::stack(std::span<const RelationTail> pairs) const {
  Matrix out(static_cast<Eigen::Index>(pairs.size()), dim_);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = vector(pairs[i].first, pairs[i].second).transpose();
  }
  return out;
}

namespace {

struct Forward {
  Vector z;
  double norm = 0.0;
  Vector f;
};

Forward forward(const Projection& proj, const Vector& raw) {
  if (raw.size() != proj.raw_dim()) throw Error("raw feature has wrong length");
  Forward fw;
  fw.z = proj.weights * raw;
  fw.norm = fw.z.norm();
  if (!(fw.norm > 0.0)) throw Error("degenerate projection (zero output)");
  fw.f = fw.z / fw.norm;
  return fw;
}

double log_sigmoid_clamped(double a) {
  return std::log(std::max(1.0 / (1.0 + std::exp(-a)), kLogClamp));
}

}  // namespace

double bce_loss(const Projection& proj, const Vector& raw, const Matrix& knowledge,
                std::span<const LabeledItem> items) {
  if (items.empty()) throw Error("bce_loss needs at least one knowledge item");
  const Forward fw = forward(proj, raw);
  double loss = 0.0;
  for (const auto& it : items) {
    const auto k = knowledge.row(it.row);
    const double a = proj.temperature * fw.f.dot(k.transpose()) / k.norm();
    loss -= it.label * log_sigmoid_clamped(a) + (1.0 - it.label) * log_sigmoid_clamped(-a);
  }
  return loss;
}

Gradient bce_gradient(const Projection& proj, const Vector& raw, const Matrix& knowledge,
                      std::span<const LabeledItem> items) {
  if (items.empty()) throw Error("bce_gradient needs at least one knowledge item");
  const Forward fw = forward(proj, raw);
  Vector g = Vector::Zero(proj.dim());
  Gradient grad;
  for (const auto& it : items) {
    const auto k = knowledge.row(it.row);
    const double kn = k.norm();
    const double c = fw.f.dot(k.transpose()) / kn;
    const double a = proj.temperature * c;
    const double s = 1.0 / (1.0 + std::exp(-a));
    const double sm = 1.0 / (1.0 + std::exp(a));
    // d(loss)/da, zero where the log clamp is active.
    double dl = 0.0;
    if (s >= kLogClamp) dl -= it.label * sm;
    if (sm >= kLogClamp) dl += (1.0 - it.label) * s;
    grad.temperature += dl * c;
    g += (dl * proj.temperature / kn) * k.transpose();
  }
  const Vector dz = (g - fw.f * fw.f.dot(g)) / fw.norm;
  grad.weights = dz * raw.transpose();
  return grad;
}

double batch_loss(const Projection& proj, std::span<const Example> batch,
                  const Matrix& knowledge) {
  if (batch.empty()) throw Error("empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += bce_loss(proj, ex.raw, knowledge, ex.items);
  return total / static_cast<double>(batch.size());
}

double train_step(Projection& proj, std::span<const Example> batch, const Matrix& knowledge,
                  double learning_rate) {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (batch.empty()) throw Error("empty batch");
  double loss = 0.0;
  Matrix dw = Matrix::Zero(proj.dim(), proj.raw_dim());
  double dtau = 0.0;
  for (const auto& ex : batch) {
    loss += bce_loss(proj, ex.raw, knowledge, ex.items);
    Gradient g = bce_gradient(proj, ex.raw, knowledge, ex.items);
    dw += g.weights;
    dtau += g.temperature;
  }
  const double n = static_cast<double>(batch.size());
  loss /= n;
  dw /= n;
  dtau /= n;
  if (!dw.allFinite() || !std::isfinite(dtau) || !std::isfinite(loss)) {
    throw Error("train_step: non-finite gradient (loss " + std::to_string(loss) + ")");
  }
  proj.weights -= learning_rate * dw;
  proj.temperature = std::max(proj.temperature - learning_rate * dtau, kMinTemperature);
  return loss;
}

void write_projection(std::ostream& out, const Projection& proj) {
  out << kCheckpointMagic << '\n';
  out << "d_raw " << proj.raw_dim() << '\n';
  out << "d " << proj.dim() << '\n';
  out << std::setprecision(17);
  out << "temperature " << proj.temperature << '\n';
  for (Eigen::Index r = 0; r < proj.dim(); ++r) {
    for (Eigen::Index c = 0; c < proj.raw_dim(); ++c) {
      if (c) out << ' ';
      out << proj.weights(r, c);
    }
    out << '\n';
  }
}

Projection read_projection(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw Error("not a projection checkpoint (bad header)");
  }
  auto field = [&](const char* name) {
    std::string key;
    std::string value;
    if (!(in >> key >> value) || key != name) {
      throw Error(std::string("checkpoint: expected field '") + name + "'");
    }
    return value;
  };
  const long raw_dim = std::stol(field("d_raw"));
  const long dim = std::stol(field("d"));
  const double temperature = std::stod(field("temperature"));
  if (raw_dim <= 0 || dim <= 0) throw Error("checkpoint: nonpositive dimension");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("checkpoint: temperature must be positive and finite");
  }
  Projection p;
  p.temperature = temperature;
  p.weights.resize(dim, raw_dim);
  for (long r = 0; r < dim; ++r) {
    for (long c = 0; c < raw_dim; ++c) {
      std::string tok;
      if (!(in >> tok)) throw Error("checkpoint: truncated weights");
      p.weights(r, c) = std::stod(tok);
    }
  }
  if (!p.weights.allFinite()) throw Error("checkpoint: non-finite weight");
  return p;
}

void save_projection(const Projection& proj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_projection(out, proj);
}

Projection load_projection(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  return read_projection(in);
}

}  // namespace lba
