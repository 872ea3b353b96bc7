#pragma once

#include <memory>
#include <string>
#include <vector>

namespace v2sim {

struct World;

// Step-based extension. Hooks run on the case worker thread; a plugin with a
// positive step_interval only sees pre/post hooks at multiples of it.
class Plugin {
 public:
  virtual ~Plugin() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> dependencies() const { return {}; }
  virtual double step_interval() const { return 0.0; }

  virtual void init(World&) {}
  virtual void pre_step(World&, double /*t*/) {}
  virtual void post_step(World&, double /*t*/) {}
};

// Keeps plugins in a dependency-respecting order; among plugins whose
// dependencies are satisfied the one registered first runs first.
class PluginManager {
 public:
  // Registers one plugin; its dependencies must already be registered.
  void register_plugin(std::unique_ptr<Plugin> p);
  // Registers several at once, allowing dependencies among them. On error
  // (MissingDependency, PluginCycle, duplicate name) nothing is registered.
  void register_batch(std::vector<std::unique_ptr<Plugin>> batch);

  std::vector<std::string> order() const;
  std::size_t size() const { return ordered_.size(); }
  Plugin* find(const std::string& name) const;

  void init(World& w);
  void pre_step(World& w, double t);
  void post_step(World& w, double t);

 private:
  static bool due(const Plugin& p, double t);

  std::vector<std::unique_ptr<Plugin>> registered_;  // registration order
  std::vector<Plugin*> ordered_;
};

}  // namespace v2sim
