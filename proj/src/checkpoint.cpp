#include "bace/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "bace/format.hpp"

namespace bace {

namespace {

constexpr const char* kHeader = "BACE-RUL v1";
constexpr const char* kNetNames[6] = {"e1", "g1", "d1", "e2", "g2", "d2"};

void write_vec(std::ostream& out, const Vec& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

void write_net(std::ostream& out, const char* name, const MlpParams<double>& net) {
  out << "net " << name << '\n';
  out << "layers " << net.spec.layers.size() << " dropout " << format_double(net.spec.dropout_rate)
      << '\n';
  for (const LayerSpec& layer : net.spec.layers)
    out << "layer " << layer.in_dim << ' ' << layer.out_dim << ' ' << to_string(layer.activation)
        << '\n';
  for (std::size_t l = 0; l < net.spec.layers.size(); ++l) {
    out << "w";
    const Mat& w = net.weights[l];
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) out << ' ' << format_double(w(r, c));
    out << "\nb";
    for (Index i = 0; i < net.biases[l].size(); ++i) out << ' ' << format_double(net.biases[l][i]);
    out << '\n';
  }
}

// Whitespace-token reader with positional error messages.
class TokenReader {
 public:
  explicit TokenReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!in_) throw CheckpointError("cannot open checkpoint " + path_);
  }

  std::string next(const char* what) {
    std::string token;
    if (!(in_ >> token))
      throw CheckpointError(path_ + ": truncated checkpoint, expected " + std::string(what));
    return token;
  }

  void expect(const char* literal) {
    std::string token = next(literal);
    if (token != literal)
      throw CheckpointError(path_ + ": expected '" + literal + "', found '" + token + "'");
  }

  long integer(const char* what) {
    std::string token = next(what);
    long v = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || p != token.data() + token.size())
      throw CheckpointError(path_ + ": bad integer for " + std::string(what) + ": '" + token + "'");
    return v;
  }

  double real(const char* what) {
    std::string token = next(what);
    double v = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || p != token.data() + token.size())
      throw CheckpointError(path_ + ": bad number for " + std::string(what) + ": '" + token + "'");
    return v;
  }

  bool at_end() {
    std::string token;
    return !(in_ >> token);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

Activation parse_activation(const std::string& token, const std::string& path) {
  if (token == "relu") return Activation::Relu;
  if (token == "sigmoid") return Activation::Sigmoid;
  if (token == "linear") return Activation::Linear;
  throw CheckpointError(path + ": unknown activation '" + token + "'");
}

MlpParams<double> read_net(TokenReader& reader, const char* name) {
  reader.expect("net");
  std::string found = reader.next("network name");
  if (found != name)
    throw CheckpointError(reader.path() + ": expected network '" + name + "', found '" + found +
                          "'");
  reader.expect("layers");
  const long n_layers = reader.integer("layer count");
  if (n_layers < 0 || n_layers > 1000)
    throw CheckpointError(reader.path() + ": implausible layer count");
  reader.expect("dropout");
  MlpParams<double> net;
  net.spec.dropout_rate = reader.real("dropout rate");
  for (long l = 0; l < n_layers; ++l) {
    reader.expect("layer");
    LayerSpec layer;
    layer.in_dim = reader.integer("in_dim");
    layer.out_dim = reader.integer("out_dim");
    layer.activation = parse_activation(reader.next("activation"), reader.path());
    net.spec.layers.push_back(layer);
  }
  try {
    if (n_layers > 0) net.spec.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(reader.path() + ": " + e.what());
  }
  for (long l = 0; l < n_layers; ++l) {
    const LayerSpec& layer = net.spec.layers[l];
    reader.expect("w");
    Mat w(layer.out_dim, layer.in_dim);
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = reader.real("weight");
    net.weights.push_back(std::move(w));
    reader.expect("b");
    Vec b(layer.out_dim);
    for (Index i = 0; i < b.size(); ++i) b[i] = reader.real("bias");
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace

void save_checkpoint(const BaceRulModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << kHeader << '\n';
  out << "dims " << model.dims.m << ' ' << model.dims.n << ' ' << model.dims.d_z << ' '
      << model.dims.rul_cap << '\n';
  out << "normalizer " << model.normalizer.dim() << '\n';
  write_vec(out, model.normalizer.mean);
  write_vec(out, model.normalizer.stddev);
  const MlpParams<double>* nets[6] = {&model.e1, &model.g1, &model.d1,
                                      &model.e2, &model.g2, &model.d2};
  for (int i = 0; i < 6; ++i) write_net(out, kNetNames[i], *nets[i]);
  out << "end\n";
  if (!out) throw DataError("failed while writing checkpoint " + path.string());
}

BaceRulModel load_checkpoint(const std::filesystem::path& path) {
  TokenReader reader(path);
  reader.expect("BACE-RUL");
  std::string version = reader.next("version");
  if (version != "v1")
    throw CheckpointError(path.string() + ": unsupported checkpoint version '" + version + "'");

  BaceRulModel model;
  reader.expect("dims");
  model.dims.m = reader.integer("m");
  model.dims.n = reader.integer("n");
  model.dims.d_z = reader.integer("d_z");
  model.dims.rul_cap = static_cast<int>(reader.integer("rul_cap"));
  model.rul_scale = 1.0 / model.dims.rul_cap;

  reader.expect("normalizer");
  const long dim = reader.integer("normalizer dim");
  if (dim < 1 || dim != model.dims.m)
    throw CheckpointError(path.string() + ": normalizer width does not match m");
  model.normalizer.mean.resize(dim);
  for (long i = 0; i < dim; ++i) model.normalizer.mean[i] = reader.real("normalizer mean");
  model.normalizer.stddev.resize(dim);
  for (long i = 0; i < dim; ++i) model.normalizer.stddev[i] = reader.real("normalizer std");

  MlpParams<double>* nets[6] = {&model.e1, &model.g1, &model.d1, &model.e2, &model.g2, &model.d2};
  for (int i = 0; i < 6; ++i) *nets[i] = read_net(reader, kNetNames[i]);
  reader.expect("end");
  if (!reader.at_end())
    throw CheckpointError(path.string() + ": trailing content after checkpoint end");

  // The stored networks identify which parts of the architecture were
  // removed during training.
  if (model.e1.empty())
    model.ablation = Ablation::NoConditionalSpace;
  else if (model.e2.empty())
    model.ablation = Ablation::NoEncoderE2;
  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": inconsistent checkpoint: " + e.what());
  }
  return model;
}

}  // namespace bace
