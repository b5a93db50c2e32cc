#include "spectrack/sim/config.hpp"

#include <initializer_list>
#include <string_view>

#include "spectrack/error.hpp"
#include "spectrack/io.hpp"

namespace spectrack::sim {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(ErrorKind::InvalidInput, "config section '" + std::string(section) + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail(ErrorKind::InvalidInput, "unknown config key '" + std::string(section) + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("config key '") + key + "': " + e.what());
  }
}

void read_train(const json& obj, std::string_view section, TrainConfig& out) {
  check_keys(obj, section, {"epochs", "learning_rate", "batch_size"});
  read(obj, "epochs", out.epochs);
  read(obj, "learning_rate", out.learning_rate);
  read(obj, "batch_size", out.batch_size);
}

json train_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}};
}

std::string kind_name(TriggerKind kind) { return kind == TriggerKind::Patch ? "patch" : "blend"; }

AttackConfig read_attack(const json& obj) {
  check_keys(obj, "attack", {"name", "kind", "patch_start", "patch_length", "patch_value", "transparency",
                             "pattern_amplitude", "pattern_seed", "target_class", "poison_rate"});
  AttackConfig a;
  std::string kind = "patch";
  read(obj, "kind", kind);
  if (kind == "patch") a.kind = TriggerKind::Patch;
  else if (kind == "blend") a.kind = TriggerKind::Blend;
  else fail(ErrorKind::InvalidInput, "unknown attack kind '" + kind + "'");
  a.name = kind;
  read(obj, "name", a.name);
  read(obj, "patch_start", a.patch_start);
  read(obj, "patch_length", a.patch_length);
  read(obj, "patch_value", a.patch_value);
  read(obj, "transparency", a.blend_transparency);
  read(obj, "pattern_amplitude", a.pattern_amplitude);
  read(obj, "pattern_seed", a.pattern_seed);
  read(obj, "target_class", a.target_class);
  read(obj, "poison_rate", a.poison_rate);
  return a;
}

}  // namespace

TriggerSpec AttackConfig::to_trigger(std::size_t input_dim) const {
  TriggerSpec spec;
  spec.name = name;
  spec.kind = kind;
  spec.target_class = target_class;
  spec.poison_rate = poison_rate;
  if (kind == TriggerKind::Patch) {
    spec.patch_start = patch_start;
    spec.patch_values.assign(patch_length, patch_value);
  } else {
    spec.blend_alpha = blend_transparency;
    spec.blend_pattern = make_blend_pattern(input_dim, pattern_amplitude, pattern_seed);
  }
  return spec;
}

ModelShape SimConfig::model_shape() const { return {task.input_dim, hidden, task.num_classes}; }

std::size_t SimConfig::effective_update_size() const { return update_size == 0 ? task.train_size / 2 : update_size; }

void SimConfig::validate() const {
  if (attacks.empty()) fail(ErrorKind::InvalidInput, "config needs at least one attack");
  for (const auto& a : attacks) a.to_trigger(task.input_dim).validate(task.input_dim, task.num_classes);
  if (csdd_pairs < 2) fail(ErrorKind::InvalidInput, "csdd.pairs must be at least 2");
  if (bins == 0) fail(ErrorKind::InvalidInput, "csdd.bins must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidInput, "detection.alpha must lie in (0, 1)");
  if (updates == 0) fail(ErrorKind::InvalidInput, "detection.updates must be positive");
  if (effective_update_size() > task.pool_size) fail(ErrorKind::InvalidInput, "update size exceeds the update pool");
  if (probe == ProbeDataset::UpdateSubset && (probe_size == 0 || probe_size > effective_update_size())) {
    fail(ErrorKind::InvalidInput, "detection.probe_size must be in [1, update size]");
  }
  if (seed_count == 0) fail(ErrorKind::InvalidInput, "seeds.count must be positive");
  if (hidden.empty()) fail(ErrorKind::InvalidInput, "model.hidden needs at least one layer");
}

SimConfig default_sim_config() {
  SimConfig c;
  AttackConfig patch;
  patch.name = "patch";
  patch.kind = TriggerKind::Patch;
  AttackConfig blend;
  blend.name = "blend";
  blend.kind = TriggerKind::Blend;
  c.attacks = {patch, blend};
  return c;
}

SimConfig sim_config_from_json(const json& doc) {
  check_keys(doc, "<root>", {"task", "model", "attack", "csdd", "detection", "seeds"});
  SimConfig c = default_sim_config();

  if (doc.contains("task")) {
    const auto& t = doc.at("task");
    check_keys(t, "task", {"num_classes", "input_dim", "separation", "noise", "train_size", "test_size", "pool_size"});
    read(t, "num_classes", c.task.num_classes);
    read(t, "input_dim", c.task.input_dim);
    read(t, "separation", c.task.separation);
    read(t, "noise", c.task.noise);
    read(t, "train_size", c.task.train_size);
    read(t, "test_size", c.task.test_size);
    read(t, "pool_size", c.task.pool_size);
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    check_keys(m, "model", {"hidden", "train", "finetune"});
    read(m, "hidden", c.hidden);
    if (m.contains("train")) read_train(m.at("train"), "model.train", c.train);
    if (m.contains("finetune")) read_train(m.at("finetune"), "model.finetune", c.finetune);
  }
  if (doc.contains("attack")) {
    const auto& a = doc.at("attack");
    c.attacks.clear();
    if (a.is_array()) {
      for (const auto& item : a) c.attacks.push_back(read_attack(item));
    } else {
      c.attacks.push_back(read_attack(a));
    }
  }
  if (doc.contains("csdd")) {
    const auto& s = doc.at("csdd");
    check_keys(s, "csdd", {"pairs", "bins"});
    read(s, "pairs", c.csdd_pairs);
    read(s, "bins", c.bins);
  }
  if (doc.contains("detection")) {
    const auto& d = doc.at("detection");
    check_keys(d, "detection", {"alpha", "updates", "update_size", "probe", "probe_size"});
    read(d, "alpha", c.alpha);
    read(d, "updates", c.updates);
    read(d, "update_size", c.update_size);
    read(d, "probe_size", c.probe_size);
    std::string probe = "test";
    read(d, "probe", probe);
    if (probe == "test") c.probe = ProbeDataset::CleanTest;
    else if (probe == "update") c.probe = ProbeDataset::UpdateSubset;
    else fail(ErrorKind::InvalidInput, "detection.probe must be 'test' or 'update'");
  }
  if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    check_keys(s, "seeds", {"base", "count"});
    read(s, "base", c.seed);
    read(s, "count", c.seed_count);
  }
  c.validate();
  return c;
}

json sim_config_to_json(const SimConfig& c) {
  json attacks = json::array();
  for (const auto& a : c.attacks) {
    json j = {{"name", a.name}, {"kind", kind_name(a.kind)}, {"target_class", a.target_class}, {"poison_rate", a.poison_rate}};
    if (a.kind == TriggerKind::Patch) {
      j["patch_start"] = a.patch_start;
      j["patch_length"] = a.patch_length;
      j["patch_value"] = a.patch_value;
    } else {
      j["transparency"] = a.blend_transparency;
      j["pattern_amplitude"] = a.pattern_amplitude;
      j["pattern_seed"] = a.pattern_seed;
    }
    attacks.push_back(std::move(j));
  }
  return {{"task",
           {{"num_classes", c.task.num_classes},
            {"input_dim", c.task.input_dim},
            {"separation", c.task.separation},
            {"noise", c.task.noise},
            {"train_size", c.task.train_size},
            {"test_size", c.task.test_size},
            {"pool_size", c.task.pool_size}}},
          {"model", {{"hidden", c.hidden}, {"train", train_to_json(c.train)}, {"finetune", train_to_json(c.finetune)}}},
          {"attack", std::move(attacks)},
          {"csdd", {{"pairs", c.csdd_pairs}, {"bins", c.bins}}},
          {"detection",
           {{"alpha", c.alpha},
            {"updates", c.updates},
            {"update_size", c.effective_update_size()},
            {"probe", c.probe == ProbeDataset::CleanTest ? "test" : "update"},
            {"probe_size", c.probe_size}}},
          {"seeds", {{"base", c.seed}, {"count", c.seed_count}}}};
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, std::string("config is not valid JSON: ") + e.what());
  }
  return sim_config_from_json(doc);
}

}  // namespace spectrack::sim
