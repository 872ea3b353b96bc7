#include <gtest/gtest.h>

#include "tiny_scenario.hpp"
#include "v2sim/engine.hpp"
#include "v2sim/error.hpp"

namespace v2sim {
namespace {

class Named : public Plugin {
 public:
  Named(std::string n, std::vector<std::string> deps) : n_(std::move(n)), deps_(std::move(deps)) {}
  std::string name() const override { return n_; }
  std::vector<std::string> dependencies() const override { return deps_; }

 private:
  std::string n_;
  std::vector<std::string> deps_;
};

std::unique_ptr<Plugin> named(std::string n, std::vector<std::string> deps = {}) {
  return std::make_unique<Named>(std::move(n), std::move(deps));
}

TEST(PluginManager, PdnThenV2g) {
  PluginManager m;
  m.register_plugin(std::make_unique<PdnPlugin>(300.0));
  m.register_plugin(std::make_unique<V2gPlugin>(proportional_strategy));
  EXPECT_EQ(m.order(), (std::vector<std::string>{"pdn", "v2g"}));
  EXPECT_NE(m.find("v2g"), nullptr);
  EXPECT_EQ(m.find("x"), nullptr);
}

TEST(PluginManager, V2gAloneIsMissingDependency) {
  PluginManager m;
  EXPECT_THROW(m.register_plugin(std::make_unique<V2gPlugin>(proportional_strategy)),
               MissingDependency);
  EXPECT_EQ(m.size(), 0u);
}

TEST(PluginManager, CycleRejectedAtomically) {
  PluginManager m;
  m.register_plugin(named("base"));
  std::vector<std::unique_ptr<Plugin>> batch;
  batch.push_back(named("A", {"B"}));
  batch.push_back(named("B", {"A"}));
  EXPECT_THROW(m.register_batch(std::move(batch)), PluginCycle);
  EXPECT_EQ(m.order(), std::vector<std::string>{"base"});
}

TEST(PluginManager, BatchOrdersByDependency) {
  PluginManager m;
  std::vector<std::unique_ptr<Plugin>> batch;
  batch.push_back(named("v2g", {"pdn"}));
  batch.push_back(named("report"));
  batch.push_back(named("pdn"));
  m.register_batch(std::move(batch));
  EXPECT_EQ(m.order(), (std::vector<std::string>{"report", "pdn", "v2g"}));
  EXPECT_THROW(m.register_plugin(named("pdn")), ConfigError);
  std::vector<std::unique_ptr<Plugin>> missing;
  missing.push_back(named("x", {"nowhere"}));
  EXPECT_THROW(m.register_batch(std::move(missing)), MissingDependency);
}

class Counter : public Plugin {
 public:
  Counter(double interval, int* inits, int* pre, int* post)
      : interval_(interval), inits_(inits), pre_(pre), post_(post) {}
  std::string name() const override { return "counter"; }
  std::vector<std::string> dependencies() const override { return {"pdn"}; }
  double step_interval() const override { return interval_; }
  void init(World&) override { ++*inits_; }
  void pre_step(World& w, double t) override {
    ++*pre_;
    if (*pre_ == 2) first_gap = t - last;
    last = t;
    saw_pdn = saw_pdn || w.pdn.has_value();
  }
  void post_step(World&, double) override { ++*post_; }

  double last = 0.0;
  double first_gap = 0.0;
  bool saw_pdn = false;

 private:
  double interval_;
  int *inits_, *pre_, *post_;
};

TEST(Simulation, ExternalPluginHooksAndCadence) {
  CaseSpec spec;
  spec.name = "plug";
  spec.scenario = test::share(test::tiny_scenario({}, {}));
  spec.days = 1;
  int inits = 0, pre = 0, post = 0;
  auto c = std::make_unique<Counter>(600.0, &inits, &pre, &post);
  auto* raw = c.get();
  Simulation sim(spec);
  sim.add_plugin(std::move(c));
  EXPECT_EQ(sim.plugin_order(), (std::vector<std::string>{"pdn", "v2g", "counter"}));
  sim.run();
  EXPECT_EQ(inits, 1);
  EXPECT_EQ(pre, 86400 / 600);
  EXPECT_EQ(post, 86400 / 600);
  EXPECT_DOUBLE_EQ(raw->first_gap, 600.0);
  EXPECT_TRUE(raw->saw_pdn);
}

TEST(Simulation, PluginNeedingDisabledPdnFails) {
  CaseSpec spec;
  spec.scenario = test::share(test::tiny_scenario({}, {}));
  spec.pdn = false;
  spec.v2g = false;
  Simulation sim(spec);
  EXPECT_TRUE(sim.plugin_order().empty());
  int a = 0, b = 0, c = 0;
  EXPECT_THROW(sim.add_plugin(std::make_unique<Counter>(0.0, &a, &b, &c)), MissingDependency);
}

}  // namespace
}  // namespace v2sim
