#pragma once

// Run configuration: JSON parsing with unknown-key rejection and the two
// shipped profiles.

#include "lgnn/datagen.hpp"
#include "lgnn/evaluation.hpp"
#include "lgnn/lgnn.hpp"
#include "lgnn/lnn.hpp"
#include "lgnn/training.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace lgnn {

using json = nlohmann::json;

/// Strict view of one JSON object: every key must be consumed or
/// finish() throws.
class JsonReader {
 public:
  JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where(key) + ": has the wrong type");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ValidationError(where(key) + ": missing");
    T v{};
    get(key, v);
    return v;
  }

  /// Marks a key as consumed without reading it.
  void mark(const std::string& key) { seen_.insert(key); }

  std::optional<JsonReader> child(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return JsonReader(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ValidationError(where(k) + ": unknown key");
  }

 private:
  std::string where(const std::string& key = {}) const {
    std::string p = path_;
    if (!key.empty()) p = p.empty() ? key : p + "." + key;
    return "key '" + (p.empty() ? std::string("<root>") : p) + "'";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

struct DatasetSpec {
  std::size_t trajectories = 10;
  std::size_t points = 50;
  double split = 0.75;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct ModelSpec {
  std::string kind = "lgnn";  // lgnn | lnn
  std::size_t embed = 5;
  std::size_t hidden = 5;
  std::optional<std::size_t> layers;  // default: 2 with gravity, else 1
  std::optional<bool> gravity;        // default: system has gravity
  std::optional<bool> drag;           // default: data has drag
  bool topo_node = false;
  std::size_t lnn_hidden = 256;
};

struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 0;
  std::string out = "out";
  SystemConfig system;
  bool drag = false;  // ground truth and data include linear drag
  DatasetSpec dataset;
  ModelSpec model;
  TrainConfig train;
  EvalConfig eval;
};

/// Independent seed streams derived from the run seed.
enum class SeedStream : std::uint64_t { dataset = 1, split = 2, init = 3, shuffle = 4, eval = 5 };

inline std::uint64_t stream_seed(const RunConfig& c, SeedStream s) {
  return derive_seed(c.seed, static_cast<std::uint64_t>(s));
}

/// full: 100 x 100 samples, 10^4 epochs, patience 500, 100 evaluation
/// trajectories. desk: 10 x 50 samples, 500 epochs, patience 100, 10.
inline RunConfig profile_defaults(const std::string& profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == "full") {
    c.dataset = {100, 100, 0.75};
    c.train.epochs = 10000;
    c.train.patience = 500;
    c.eval.n_init = 100;
  } else if (profile == "desk") {
    c.dataset = {10, 50, 0.75};
    c.train.epochs = 500;
    c.train.patience = 100;
    c.eval.n_init = 10;
  } else {
    throw ValidationError("unknown profile '" + profile + "' (expected full or desk)");
  }
  return c;
}

inline void validate(const RunConfig& c) {
  make_system(c.system, c.drag);
  if (c.dataset.trajectories < 1 || c.dataset.points < 1)
    throw ValidationError("dataset: trajectories and points must be >= 1");
  if (!(c.dataset.split > 0.0 && c.dataset.split < 1.0))
    throw ValidationError("dataset: split must be in (0, 1)");
  if (c.model.kind != "lgnn" && c.model.kind != "lnn")
    throw ValidationError("model: kind must be lgnn or lnn");
  if (!(c.train.adam.lr > 0.0)) throw ValidationError("train: lr must be positive");
  if (c.train.batch < 1) throw ValidationError("train: batch must be >= 1");
  if (c.eval.n_init < 1 || !(c.eval.horizon > 0.0))
    throw ValidationError("eval: n_init must be >= 1 and horizon positive");
}

inline RunConfig parse_run_config(const json& j, const std::optional<std::string>& profile_override = {}) {
  JsonReader root(j, "");
  std::string profile = "desk";
  root.get("profile", profile);
  if (profile_override) profile = *profile_override;
  RunConfig c = profile_defaults(profile);
  root.get("seed", c.seed);
  root.get("out", c.out);
  if (auto s = root.child("system")) {
    std::string kind = to_string(c.system.kind);
    s->get("kind", kind);
    c.system.kind = parse_system_kind(kind);
    s->get("n", c.system.n);
    s->get("dim", c.system.dim);
    s->get("mass", c.system.mass);
    s->get("length", c.system.length);
    s->get("k", c.system.k);
    s->get("r0", c.system.r0);
    s->get("g", c.system.g);
    s->get("drag", c.drag);
    s->get("drag_coefficient", c.system.drag_coefficient);
    s->get("angle_range", c.system.angle_range);
    s->get("position_noise", c.system.position_noise);
    s->get("velocity_range", c.system.velocity_range);
    s->get("dt", c.system.dt);
    s->get("stride", c.system.stride);
    s->finish();
  }
  if (auto d = root.child("dataset")) {
    d->get("trajectories", c.dataset.trajectories);
    d->get("points", c.dataset.points);
    d->get("split", c.dataset.split);
    d->finish();
  }
  if (auto m = root.child("model")) {
    m->get("kind", c.model.kind);
    m->get("embed", c.model.embed);
    m->get("hidden", c.model.hidden);
    m->get("layers", c.model.layers);
    m->get("gravity", c.model.gravity);
    m->get("drag", c.model.drag);
    m->get("topo_node", c.model.topo_node);
    m->get("lnn_hidden", c.model.lnn_hidden);
    m->finish();
  }
  if (auto t = root.child("train")) {
    t->get("lr", c.train.adam.lr);
    t->get("batch", c.train.batch);
    t->get("epochs", c.train.epochs);
    t->get("patience", c.train.patience);
    std::string loss = to_string(c.train.loss);
    t->get("loss", loss);
    c.train.loss = parse_loss_kind(loss);
    t->finish();
  }
  if (auto e = root.child("eval")) {
    e->get("n_init", c.eval.n_init);
    e->get("horizon", c.eval.horizon);
    e->get("dt", c.eval.dt);
    e->get("stride", c.eval.stride);
    e->finish();
  }
  root.finish();
  validate(c);
  return c;
}

inline json to_json(const SystemConfig& s, bool drag) {
  return {{"kind", to_string(s.kind)}, {"n", s.n}, {"dim", s.dim}, {"mass", s.mass},
          {"length", s.length}, {"k", s.k}, {"r0", s.r0}, {"g", s.g}, {"drag", drag},
          {"drag_coefficient", s.drag_coefficient}, {"angle_range", s.angle_range},
          {"position_noise", s.position_noise}, {"velocity_range", s.velocity_range},
          {"dt", s.dt}, {"stride", s.stride}};
}

inline std::pair<SystemConfig, bool> system_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  SystemConfig s;
  bool drag = false;
  s.kind = parse_system_kind(r.require<std::string>("kind"));
  r.get("n", s.n);
  r.get("dim", s.dim);
  r.get("mass", s.mass);
  r.get("length", s.length);
  r.get("k", s.k);
  r.get("r0", s.r0);
  r.get("g", s.g);
  r.get("drag", drag);
  r.get("drag_coefficient", s.drag_coefficient);
  r.get("angle_range", s.angle_range);
  r.get("position_noise", s.position_noise);
  r.get("velocity_range", s.velocity_range);
  r.get("dt", s.dt);
  r.get("stride", s.stride);
  r.finish();
  return {s, drag};
}

inline json to_json(const RunConfig& c) {
  json m = {{"kind", c.model.kind}, {"embed", c.model.embed}, {"hidden", c.model.hidden},
            {"topo_node", c.model.topo_node}, {"lnn_hidden", c.model.lnn_hidden}};
  if (c.model.layers) m["layers"] = *c.model.layers;
  if (c.model.gravity) m["gravity"] = *c.model.gravity;
  if (c.model.drag) m["drag"] = *c.model.drag;
  return {{"profile", c.profile},
          {"seed", c.seed},
          {"out", c.out},
          {"system", to_json(c.system, c.drag)},
          {"dataset", {{"trajectories", c.dataset.trajectories}, {"points", c.dataset.points},
                       {"split", c.dataset.split}}},
          {"model", m},
          {"train", {{"lr", c.train.adam.lr}, {"batch", c.train.batch}, {"epochs", c.train.epochs},
                     {"patience", c.train.patience}, {"loss", to_string(c.train.loss)}}},
          {"eval", {{"n_init", c.eval.n_init}, {"horizon", c.eval.horizon}, {"dt", c.eval.dt},
                    {"stride", c.eval.stride}}}};
}

/// LGNN hyperparameters for the configured system. Node types come from
/// the system graph; gravity and drag default to what the data contains.
inline LgnnConfig lgnn_config_for(const RunConfig& c) {
  const AnalyticSystem sys = make_system(c.system, c.drag);
  LgnnConfig l;
  l.n_types = sys.graph().n_types;
  l.dim = c.system.dim;
  l.embed = c.model.embed;
  l.hidden = c.model.hidden;
  l.gravity = c.model.gravity.value_or(sys.has_gravity());
  l.drag = c.model.drag.value_or(c.drag);
  l.layers = c.model.layers.value_or(l.gravity ? 2 : 1);
  l.topo_node = c.model.topo_node;
  l.validate();
  return l;
}

inline LnnConfig lnn_config_for(const RunConfig& c) {
  const AnalyticSystem sys = make_system(c.system, c.drag);
  return {sys.n, c.system.dim, c.model.lnn_hidden};
}

}  // namespace lgnn
