#include "hypball/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "hypball/errors.hpp"

namespace hypball::ckpt {

using nlohmann::json;

std::map<std::string, Vec> to_map(const std::vector<nn::Param*>& params) {
  std::map<std::string, Vec> out;
  for (const nn::Param* p : params) {
    auto [it, inserted] = out.emplace(p->name, p->value);
    if (!inserted) throw UsageError("duplicate parameter name: " + p->name);
  }
  return out;
}

void save_checkpoint(const std::string& path, const std::vector<nn::Param*>& params) {
  json j = json::object();
  for (const auto& [name, value] : to_map(params)) j[name] = value;
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
  if (!out) throw UsageError("write failed: " + path);
}

std::map<std::string, Vec> read_checkpoint_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("checkpoint must be a JSON object");
  std::map<std::string, Vec> out;
  for (const auto& [name, arr] : j.items()) {
    if (!arr.is_array()) throw SchemaError("checkpoint entry " + name + " must be an array");
    Vec v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
      if (!x.is_number()) throw SchemaError("checkpoint entry " + name + " has a non-number");
      v.push_back(x.get<double>());
    }
    out.emplace(name, std::move(v));
  }
  return out;
}

void load_checkpoint(const std::string& path, const std::vector<nn::Param*>& params) {
  auto stored = read_checkpoint_map(path);
  std::size_t used = 0;
  for (nn::Param* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw SchemaError("checkpoint is missing parameter: " + p->name);
    if (it->second.size() != p->value.size())
      throw SchemaError("checkpoint parameter " + p->name + " has the wrong length");
    p->value = it->second;
    ++used;
  }
  if (used != stored.size())
    throw SchemaError("checkpoint has entries this model does not use");
}

}  // namespace hypball::ckpt
