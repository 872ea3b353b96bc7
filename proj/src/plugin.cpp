#include "v2sim/plugin.hpp"

#include <cmath>
#include <queue>
#include <unordered_map>

#include "v2sim/error.hpp"

namespace v2sim {

void PluginManager::register_plugin(std::unique_ptr<Plugin> p) {
  std::vector<std::unique_ptr<Plugin>> batch;
  batch.push_back(std::move(p));
  register_batch(std::move(batch));
}

void PluginManager::register_batch(std::vector<std::unique_ptr<Plugin>> batch) {
  std::vector<Plugin*> all;
  for (const auto& p : registered_) all.push_back(p.get());
  for (const auto& p : batch) {
    if (!p) throw Error("null plugin");
    all.push_back(p.get());
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (!index.emplace(all[i]->name(), i).second)
      throw ConfigError("plugin '" + all[i]->name() + "' registered twice");

  std::vector<std::vector<std::size_t>> dependents(all.size());
  std::vector<int> pending(all.size(), 0);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (const auto& d : all[i]->dependencies()) {
      auto it = index.find(d);
      if (it == index.end())
        throw MissingDependency("plugin '" + all[i]->name() + "' requires '" + d + "'");
      dependents[it->second].push_back(i);
      ++pending[i];
    }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (pending[i] == 0) ready.push(i);
  std::vector<Plugin*> order;
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    order.push_back(all[i]);
    for (auto j : dependents[i])
      if (--pending[j] == 0) ready.push(j);
  }
  if (order.size() != all.size()) {
    std::string names;
    for (std::size_t i = 0; i < all.size(); ++i)
      if (pending[i] > 0) names += (names.empty() ? "" : ", ") + all[i]->name();
    throw PluginCycle("plugin dependency cycle among: " + names);
  }
  for (auto& p : batch) registered_.push_back(std::move(p));
  ordered_ = std::move(order);
}

std::vector<std::string> PluginManager::order() const {
  std::vector<std::string> out;
  for (const auto* p : ordered_) out.push_back(p->name());
  return out;
}

Plugin* PluginManager::find(const std::string& name) const {
  for (auto* p : ordered_)
    if (p->name() == name) return p;
  return nullptr;
}

bool PluginManager::due(const Plugin& p, double t) {
  const double iv = p.step_interval();
  if (iv <= 0.0) return true;
  const double r = std::fmod(t, iv);
  return r < 1e-9 || iv - r < 1e-9;
}

void PluginManager::init(World& w) {
  for (auto* p : ordered_) p->init(w);
}

void PluginManager::pre_step(World& w, double t) {
  for (auto* p : ordered_)
    if (due(*p, t)) p->pre_step(w, t);
}

void PluginManager::post_step(World& w, double t) {
  for (auto* p : ordered_)
    if (due(*p, t)) p->post_step(w, t);
}

}  // namespace v2sim
