#include "jsi/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "jsi/snapshot.hpp"

namespace jsi {
namespace fs = std::filesystem;

namespace {

nlohmann::json read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint manifest " + path.string());
  try {
    nlohmann::json m;
    in >> m;
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

template <typename T>
Tensor<T> load_checked(const fs::path& path, const Shape& expected) {
  Tensor<T> t = load_snapshot<T>(path);
  if (!(t.shape() == expected))
    throw std::runtime_error(path.string() + ": shape " + t.shape().str() + ", expected " +
                             expected.str());
  return t;
}

}  // namespace

template <typename T>
void save_checkpoint(const fs::path& dir, const CheckpointInfo& info,
                     const std::vector<NamedStore<T>>& stores) {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& ns : stores) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : ns.store->params()) {
      save_snapshot(tmp / (p.name + ".jsit"), p.value());
      save_snapshot(tmp / (p.name + ".adam_m.jsit"), p.m);
      save_snapshot(tmp / (p.name + ".adam_v.jsit"), p.v);
      params.push_back({{"name", p.name}, {"step", p.step}});
    }
    nlohmann::json buffers = nlohmann::json::array();
    for (const auto& [name, buf] : ns.store->buffers()) {
      save_snapshot(tmp / (name + ".jsit"), *buf);
      buffers.push_back(name);
    }
    groups[ns.group] = {{"params", params}, {"buffers", buffers}};
  }
  nlohmann::json m{{"phase", info.phase},
                   {"step", info.step},
                   {"seed", info.seed},
                   {"config", info.config},
                   {"groups", groups}};
  {
    std::ofstream out(tmp / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (tmp / "manifest.json").string());
  }
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  const nlohmann::json m = read_manifest(dir);
  CheckpointInfo info;
  try {
    info.phase = m.at("phase").get<std::string>();
    info.step = m.at("step").get<std::int64_t>();
    info.seed = m.at("seed").get<std::uint64_t>();
    info.config = m.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error((dir / "manifest.json").string() + ": " + e.what());
  }
  return info;
}

template <typename T>
CheckpointInfo load_checkpoint(const fs::path& dir, const std::vector<NamedStore<T>>& stores,
                               bool with_optimizer,
                               const std::vector<std::string>& optional_groups) {
  const nlohmann::json m = read_manifest(dir);
  CheckpointInfo info = read_checkpoint_info(dir);
  const auto& groups = m.at("groups");
  for (const auto& ns : stores) {
    if (!groups.contains(ns.group)) {
      if (std::find(optional_groups.begin(), optional_groups.end(), ns.group) !=
          optional_groups.end())
        continue;
      throw std::runtime_error((dir / "manifest.json").string() + ": missing group '" +
                               ns.group + "'");
    }
    const auto& g = groups.at(ns.group);
    std::size_t listed = 0;
    for (const auto& entry : g.at("params")) {
      const std::string name = entry.at("name").template get<std::string>();
      Parameter<T>* p = ns.store->find(name);
      if (!p)
        throw std::runtime_error((dir / "manifest.json").string() + ": unexpected parameter " +
                                 name);
      const Shape shape = p->value().shape();
      p->value_mut() = load_checked<T>(dir / (name + ".jsit"), shape);
      if (with_optimizer) {
        p->m = load_checked<T>(dir / (name + ".adam_m.jsit"), shape);
        p->v = load_checked<T>(dir / (name + ".adam_v.jsit"), shape);
        p->step = entry.at("step").template get<std::int64_t>();
      } else {
        p->m = Tensor<T>(shape);
        p->v = Tensor<T>(shape);
        p->step = 0;
      }
      ++listed;
    }
    if (listed != ns.store->params().size())
      throw std::runtime_error((dir / "manifest.json").string() + ": group '" + ns.group +
                               "' lists " + std::to_string(listed) + " parameters, expected " +
                               std::to_string(ns.store->params().size()));
    for (const auto& [name, buf] : ns.store->buffers())
      *buf = load_checked<T>(dir / (name + ".jsit"), buf->shape());
  }
  return info;
}

#define JSI_INSTANTIATE(T)                                                               \
  template void save_checkpoint<T>(const fs::path&, const CheckpointInfo&,               \
                                   const std::vector<NamedStore<T>>&);                   \
  template CheckpointInfo load_checkpoint<T>(const fs::path&,                            \
                                             const std::vector<NamedStore<T>>&, bool,    \
                                             const std::vector<std::string>&);
JSI_INSTANTIATE(float)
JSI_INSTANTIATE(double)
#undef JSI_INSTANTIATE

}  // namespace jsi
