#pragma once

// Persistence: datasets, checkpoints and reports as JSON, trajectories and
// curves as CSV with shortest round-trip number formatting.

#include "lgnn/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace lgnn {

inline constexpr int kCheckpointSchema = 1;
inline constexpr int kDatasetSchema = 1;
inline constexpr int kReportSchema = 1;

// ---- files ---------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << data;
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

/// Parses JSON text; syntax errors and truncation report the byte offset.
inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(source + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline json load_json(const std::filesystem::path& p) { return parse_json(read_file(p), p.string()); }

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

// ---- numbers ---------------------------------------------------------------

/// Shortest decimal that reads back as the same double.
inline std::string format_double(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec vec_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ValidationError(what + ": non-numeric entry");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

// ---- datasets --------------------------------------------------------------

inline json to_json(const Dataset& ds) {
  json samples = json::array();
  for (const auto& s : ds.samples)
    samples.push_back({{"trajectory", s.trajectory}, {"t", s.state.t}, {"q", to_json(s.state.q)},
                       {"qdot", to_json(s.state.qdot)}, {"qddot", to_json(s.qddot)}});
  const auto& m = ds.meta;
  return {{"schema", kDatasetSchema},
          {"system", to_json(m.system, m.drag)},
          {"dt", m.dt},
          {"stride", m.stride},
          {"seed", m.seed},
          {"trajectories", m.trajectories},
          {"points", m.points},
          {"samples", samples}};
}

inline Dataset dataset_from_json(const json& j) {
  JsonReader r(j, "dataset");
  if (const int v = r.require<int>("schema"); v != kDatasetSchema)
    throw IoError("dataset: schema version " + std::to_string(v) + ", expected " +
                  std::to_string(kDatasetSchema));
  Dataset ds;
  std::tie(ds.meta.system, ds.meta.drag) = system_from_json(j.at("system"), "dataset.system");
  r.mark("system");
  ds.meta.dt = r.require<double>("dt");
  ds.meta.stride = r.require<std::size_t>("stride");
  ds.meta.seed = r.require<std::uint64_t>("seed");
  ds.meta.trajectories = r.require<std::size_t>("trajectories");
  ds.meta.points = r.require<std::size_t>("points");
  r.mark("samples");
  r.finish();
  const json& arr = j.at("samples");
  if (!arr.is_array()) throw ValidationError("dataset.samples: expected an array");
  const std::size_t N = make_system(ds.meta.system).dof();
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = "dataset.samples[" + std::to_string(k) + "]";
    JsonReader sr(arr[k], where);
    Sample s;
    s.trajectory = sr.require<std::size_t>("trajectory");
    s.state.t = sr.require<double>("t");
    s.state.q = vec_from_json(arr[k].at("q"), where + ".q");
    s.state.qdot = vec_from_json(arr[k].at("qdot"), where + ".qdot");
    s.qddot = vec_from_json(arr[k].at("qddot"), where + ".qddot");
    sr.mark("q");
    sr.mark("qdot");
    sr.mark("qddot");
    sr.finish();
    if (static_cast<std::size_t>(s.state.q.size()) != N ||
        static_cast<std::size_t>(s.state.qdot.size()) != N ||
        static_cast<std::size_t>(s.qddot.size()) != N)
      throw ValidationError(where + ": expected " + std::to_string(N) + " coordinates");
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& p) { write_file(p, dump(to_json(ds))); }
inline Dataset load_dataset(const std::filesystem::path& p) { return dataset_from_json(load_json(p)); }

// ---- checkpoints -----------------------------------------------------------

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;  // last completed epoch, cumulative over resumes
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  LossKind loss = LossKind::l2;
  friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct Checkpoint {
  int schema = kCheckpointSchema;
  std::string model_kind = "lgnn";
  LgnnConfig lgnn;
  LnnConfig lnn;
  Vec params;
  SystemConfig system;  // the training system
  bool drag = false;
  TrainMeta meta;
  AdamState adam;

  const std::vector<TensorInfo>& tensors() const {
    if (model_kind == "lgnn") {
      if (!lgnn_layout_ || !(lgnn_layout_->cfg == lgnn)) lgnn_layout_ = std::make_shared<LgnnLayout>(lgnn);
      return lgnn_layout_->tensors;
    }
    if (!lnn_layout_ || !(lnn_layout_->cfg == lnn)) lnn_layout_ = std::make_shared<LnnLayout>(lnn);
    return lnn_layout_->tensors;
  }
  std::size_t parameter_count() const {
    return model_kind == "lgnn" ? LgnnLayout(lgnn).size : LnnLayout(lnn).size;
  }

 private:
  mutable std::shared_ptr<LgnnLayout> lgnn_layout_;
  mutable std::shared_ptr<LnnLayout> lnn_layout_;
};

inline bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.schema == b.schema && a.model_kind == b.model_kind && a.lgnn == b.lgnn && a.lnn == b.lnn &&
         a.params == b.params && a.system == b.system && a.drag == b.drag && a.meta == b.meta &&
         a.adam.t == b.adam.t && a.adam.m == b.adam.m && a.adam.v == b.adam.v;
}

inline json to_json(const Checkpoint& c) {
  json cfg;
  if (c.model_kind == "lgnn")
    cfg = {{"n_types", c.lgnn.n_types}, {"dim", c.lgnn.dim}, {"embed", c.lgnn.embed},
           {"hidden", c.lgnn.hidden}, {"layers", c.lgnn.layers}, {"gravity", c.lgnn.gravity},
           {"drag", c.lgnn.drag}, {"topo_node", c.lgnn.topo_node}};
  else
    cfg = {{"n", c.lnn.n}, {"dim", c.lnn.dim}, {"hidden", c.lnn.hidden}};
  json tensors = json::object();
  for (const auto& t : c.tensors()) {
    const double* base = c.params.data() + t.offset;
    if (t.is_vector) {
      tensors[t.name] = std::vector<double>(base, base + t.rows);
    } else {
      json rows = json::array();
      for (std::size_t r = 0; r < t.rows; ++r)
        rows.push_back(std::vector<double>(base + r * t.cols, base + (r + 1) * t.cols));
      tensors[t.name] = rows;
    }
  }
  json adam = {{"t", c.adam.t}, {"m", to_json(c.adam.m)}, {"v", to_json(c.adam.v)}};
  return {{"schema", c.schema},
          {"model", c.model_kind},
          {"config", cfg},
          {"system", to_json(c.system, c.drag)},
          {"training", {{"seed", c.meta.seed}, {"epoch", c.meta.epoch}, {"best_epoch", c.meta.best_epoch},
                        {"best_val", c.meta.best_val}, {"loss", to_string(c.meta.loss)}}},
          {"adam", adam},
          {"tensors", tensors}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  JsonReader r(j, "checkpoint");
  Checkpoint c;
  c.schema = r.require<int>("schema");
  if (c.schema != kCheckpointSchema)
    throw IoError("checkpoint: schema version " + std::to_string(c.schema) + ", expected " +
                  std::to_string(kCheckpointSchema));
  c.model_kind = r.require<std::string>("model");
  auto cfg = r.child("config");
  if (!cfg) throw ValidationError("checkpoint: missing config");
  if (c.model_kind == "lgnn") {
    c.lgnn.n_types = cfg->require<std::size_t>("n_types");
    c.lgnn.dim = cfg->require<std::size_t>("dim");
    c.lgnn.embed = cfg->require<std::size_t>("embed");
    c.lgnn.hidden = cfg->require<std::size_t>("hidden");
    c.lgnn.layers = cfg->require<std::size_t>("layers");
    c.lgnn.gravity = cfg->require<bool>("gravity");
    c.lgnn.drag = cfg->require<bool>("drag");
    c.lgnn.topo_node = cfg->require<bool>("topo_node");
    c.lgnn.validate();
  } else if (c.model_kind == "lnn") {
    c.lnn.n = cfg->require<std::size_t>("n");
    c.lnn.dim = cfg->require<std::size_t>("dim");
    c.lnn.hidden = cfg->require<std::size_t>("hidden");
  } else {
    throw ValidationError("checkpoint: unknown model kind '" + c.model_kind + "'");
  }
  cfg->finish();
  r.mark("system");
  std::tie(c.system, c.drag) = system_from_json(j.at("system"), "checkpoint.system");
  auto tr = r.child("training");
  if (!tr) throw ValidationError("checkpoint: missing training");
  c.meta.seed = tr->require<std::uint64_t>("seed");
  c.meta.epoch = tr->require<std::size_t>("epoch");
  c.meta.best_epoch = tr->require<std::size_t>("best_epoch");
  c.meta.best_val = tr->require<double>("best_val");
  c.meta.loss = parse_loss_kind(tr->require<std::string>("loss"));
  tr->finish();
  auto ad = r.child("adam");
  if (!ad) throw ValidationError("checkpoint: missing adam");
  c.adam.t = ad->require<std::uint64_t>("t");
  ad->mark("m");
  ad->mark("v");
  ad->finish();
  c.adam.m = vec_from_json(j.at("adam").at("m"), "checkpoint.adam.m");
  c.adam.v = vec_from_json(j.at("adam").at("v"), "checkpoint.adam.v");

  auto tensors = r.child("tensors");
  if (!tensors) throw ValidationError("checkpoint: missing tensors");
  r.finish();
  const std::size_t P = c.parameter_count();
  c.params = Vec::Zero(static_cast<Eigen::Index>(P));
  const json& tj = j.at("tensors");
  for (const auto& t : c.tensors()) {
    const std::string where = "checkpoint.tensors." + t.name;
    if (!tj.contains(t.name)) throw ValidationError(where + ": missing");
    tensors->mark(t.name);
    const json& a = tj.at(t.name);
    double* base = c.params.data() + t.offset;
    if (t.is_vector) {
      const Vec v = vec_from_json(a, where);
      if (static_cast<std::size_t>(v.size()) != t.rows)
        throw ValidationError(where + ": expected " + std::to_string(t.rows) + " entries");
      std::copy(v.data(), v.data() + v.size(), base);
    } else {
      if (!a.is_array() || a.size() != t.rows)
        throw ValidationError(where + ": expected " + std::to_string(t.rows) + " rows");
      for (std::size_t row = 0; row < t.rows; ++row) {
        const Vec v = vec_from_json(a[row], where);
        if (static_cast<std::size_t>(v.size()) != t.cols)
          throw ValidationError(where + ": expected " + std::to_string(t.cols) + " columns");
        std::copy(v.data(), v.data() + v.size(), base + row * t.cols);
      }
    }
  }
  tensors->finish();
  if (c.adam.t > 0 && (static_cast<std::size_t>(c.adam.m.size()) != P ||
                       static_cast<std::size_t>(c.adam.v.size()) != P))
    throw ValidationError("checkpoint.adam: moment vectors do not match the parameter count");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& p) {
  write_file(p, dump(to_json(c)));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& p) {
  return checkpoint_from_json(load_json(p));
}

/// Fresh checkpoint for a configured run (untrained parameters).
inline Checkpoint initial_checkpoint(const RunConfig& rc) {
  Checkpoint c;
  c.model_kind = rc.model.kind;
  c.system = rc.system;
  c.drag = rc.drag;
  c.meta.seed = rc.seed;
  c.meta.loss = rc.train.loss;
  const std::uint64_t init = stream_seed(rc, SeedStream::init);
  if (c.model_kind == "lgnn") {
    c.lgnn = lgnn_config_for(rc);
    c.params = LgnnNetwork(c.lgnn, init).params;
  } else {
    c.lnn = lnn_config_for(rc);
    c.params = LnnModel(c.lnn, init).parameters();
  }
  return c;
}

/// Model for `graph` (LGNN: any size; LNN: the trained size only).
inline std::unique_ptr<TrainableModel> make_model(const Checkpoint& c, const SystemGraph& graph) {
  if (c.model_kind == "lgnn") {
    auto net = std::make_shared<LgnnNetwork>(c.lgnn, 0);
    net->params = c.params;
    return std::make_unique<LgnnModel>(net, graph);
  }
  if (graph.n != c.lnn.n || graph.dim != c.lnn.dim)
    throw ValidationError("lnn checkpoint was trained on " + std::to_string(c.lnn.n) +
                          " particles; system has " + std::to_string(graph.n));
  auto m = std::make_unique<LnnModel>(c.lnn, 0);
  m->parameters() = c.params;
  return m;
}

inline std::shared_ptr<LgnnNetwork> lgnn_network(const Checkpoint& c) {
  if (c.model_kind != "lgnn") throw ValidationError("checkpoint does not hold an LGNN");
  auto net = std::make_shared<LgnnNetwork>(c.lgnn, 0);
  net->params = c.params;
  return net;
}

// ---- reports and curves ----------------------------------------------------

inline json to_json(const Band& b) { return {{"lo", b.lo}, {"median", b.median}, {"hi", b.hi}}; }

/// Deterministic report document (wall-clock time excluded).
inline json to_json(const EvalReport& r) {
  json j = {{"schema", kReportSchema},
            {"time", r.time},
            {"rollout_error", to_json(r.re)},
            {"energy_violation", to_json(r.ev)},
            {"geo_mean_re", r.geo_mean_re},
            {"geo_mean_ev", r.geo_mean_ev},
            {"n_trajectories", r.n_trajectories},
            {"n_failed", r.n_failed},
            {"failures", r.failures}};
  j["momentum_residual"] = r.momentum_residual ? json(*r.momentum_residual) : json(nullptr);
  if (r.drag_curve)
    j["drag_curve"] = {{"v", r.drag_curve->v}, {"drag_x", r.drag_curve->drag_x},
                       {"slope", r.drag_curve->slope}, {"intercept", r.drag_curve->intercept},
                       {"scale", r.drag_curve->scale}};
  else
    j["drag_curve"] = nullptr;
  return j;
}

inline Band band_from_json(const json& j) {
  return {j.at("lo").get<std::vector<double>>(), j.at("median").get<std::vector<double>>(),
          j.at("hi").get<std::vector<double>>()};
}

inline EvalReport report_from_json(const json& j) {
  try {
    if (j.at("schema").get<int>() != kReportSchema) throw IoError("report: unsupported schema version");
    EvalReport r;
    r.time = j.at("time").get<std::vector<double>>();
    r.re = band_from_json(j.at("rollout_error"));
    r.ev = band_from_json(j.at("energy_violation"));
    r.geo_mean_re = j.at("geo_mean_re").get<double>();
    r.geo_mean_ev = j.at("geo_mean_ev").get<double>();
    r.n_trajectories = j.at("n_trajectories").get<std::size_t>();
    r.n_failed = j.at("n_failed").get<std::size_t>();
    r.failures = j.at("failures").get<std::vector<std::string>>();
    if (!j.at("momentum_residual").is_null()) r.momentum_residual = j.at("momentum_residual").get<double>();
    if (const auto& d = j.at("drag_curve"); !d.is_null())
      r.drag_curve = DragCurve{d.at("v").get<std::vector<double>>(), d.at("drag_x").get<std::vector<double>>(),
                               d.at("slope").get<double>(), d.at("intercept").get<double>(),
                               d.at("scale").get<double>()};
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: malformed document: ") + e.what());
  }
}

inline bool operator==(const Band& a, const Band& b) {
  return a.lo == b.lo && a.median == b.median && a.hi == b.hi;
}

/// Header `t,q_0,...,qdot_0,...` and one row per state.
inline std::string trajectory_csv(const std::vector<State>& states) {
  std::string out = "t";
  const std::size_t N = states.empty() ? 0 : static_cast<std::size_t>(states.front().q.size());
  for (std::size_t k = 0; k < N; ++k) out += ",q_" + std::to_string(k);
  for (std::size_t k = 0; k < N; ++k) out += ",qdot_" + std::to_string(k);
  out += "\n";
  for (const auto& s : states) {
    out += format_double(s.t);
    for (Eigen::Index k = 0; k < s.q.size(); ++k) out += "," + format_double(s.q[k]);
    for (Eigen::Index k = 0; k < s.qdot.size(); ++k) out += "," + format_double(s.qdot[k]);
    out += "\n";
  }
  return out;
}

inline std::vector<State> trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t", 0) != 0) throw ValidationError("trajectory csv: missing header");
  std::size_t cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols % 2 != 1) throw ValidationError("trajectory csv: header must have 2N+1 columns");
  const auto N = static_cast<Eigen::Index>((cols - 1) / 2);
  std::vector<State> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> xs;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      double x;
      auto r = std::from_chars(p, end, x);
      if (r.ec != std::errc()) throw ValidationError("trajectory csv: bad number on line " + std::to_string(row));
      xs.push_back(x);
      p = r.ptr + 1;
      if (r.ptr == end) break;
    }
    if (xs.size() != cols) throw ValidationError("trajectory csv: wrong column count on line " + std::to_string(row));
    State s{Vec(N), Vec(N), xs[0]};
    for (Eigen::Index k = 0; k < N; ++k) {
      s.q[k] = xs[static_cast<std::size_t>(1 + k)];
      s.qdot[k] = xs[static_cast<std::size_t>(1 + N + k)];
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Columns `name,...` from equally long series.
inline std::string columns_csv(const std::vector<std::string>& names,
                               const std::vector<std::vector<double>>& cols) {
  if (names.size() != cols.size()) throw ValidationError("csv: one name per column required");
  std::string out;
  for (std::size_t k = 0; k < names.size(); ++k) out += (k ? "," : "") + names[k];
  out += "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().size();
  for (const auto& c : cols)
    if (c.size() != rows) throw ValidationError("csv: columns differ in length");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + format_double(cols[k][r]);
    out += "\n";
  }
  return out;
}

}  // namespace lgnn
