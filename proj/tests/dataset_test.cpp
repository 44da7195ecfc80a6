#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "anomalygen/dataset.hpp"
#include "anomalygen/util.hpp"

using namespace anomalygen;

namespace {

Session mk_session(const std::string& id, const std::string& label,
                   const std::string& provenance,
                   std::vector<std::pair<std::string, std::string>> events = {
                       {"INFO", "block stored"}}) {
  Session s;
  s.session_id = id;
  s.label = label;
  s.provenance = provenance;
  s.context = "ctx for " + id;
  for (std::size_t i = 0; i < events.size(); ++i) {
    ParamEvent e;
    e.template_id = i + 1;
    e.level = events[i].first;
    e.message = events[i].second;
    s.events.push_back(std::move(e));
  }
  return s;
}

std::vector<Session> make_pool(std::size_t normals, std::size_t anomalous) {
  std::vector<Session> pool;
  for (std::size_t i = 0; i < normals; ++i)
    pool.push_back(mk_session("syn-n" + std::to_string(i), "normal", "synthetic"));
  for (std::size_t i = 0; i < anomalous; ++i)
    pool.push_back(mk_session("syn-a" + std::to_string(i), "anomalous", "synthetic"));
  return pool;
}

DatasetSplit make_clean_split(std::size_t train_real, std::size_t train_syn,
                              std::size_t test_real) {
  DatasetSplit split;
  for (std::size_t i = 0; i < train_real; ++i)
    split.train.push_back(mk_session("real-tr" + std::to_string(i), "normal", "real"));
  for (std::size_t i = 0; i < train_syn; ++i)
    split.train.push_back(mk_session("syn-tr" + std::to_string(i), "anomalous", "synthetic"));
  for (std::size_t i = 0; i < test_real; ++i)
    split.test.push_back(mk_session("real-te" + std::to_string(i), "normal", "real"));
  return split;
}

std::string temp_path(const std::string& tag) {
  static int counter = 0;
  return (std::filesystem::temp_directory_path() /
          ("anomalygen_dataset_" + tag + "_" + std::to_string(++counter) + ".jsonl"))
      .string();
}

}  // namespace

TEST_CASE("augmentation target is round-half-up of ratio times n_real") {
  // Spot values worked out by hand.
  CHECK(augmentation_target(0.01, 1000) == 10);
  CHECK(augmentation_target(0.001, 46000) == 46);  // the formula, exactly
  CHECK(augmentation_target(0.0, 5000) == 0);
  CHECK(augmentation_target(1.0, 7) == 7);
  CHECK(augmentation_target(0.5, 7) == 4);   // 3.5 rounds up
  CHECK(augmentation_target(0.25, 2) == 1);  // 0.5 rounds up
  CHECK(augmentation_target(2.0, 3) == 6);
  CHECK(augmentation_target(0.1, 4) == 0);   // 0.4 rounds down

  // Randomized pairs against exact integer arithmetic. Ratios are binary
  // fractions k/1024, which doubles represent exactly, so
  // floor(R*n + 0.5) == floor((2*k*n + 1024) / 2048) with no rounding slop.
  util::SplitMix64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    std::uint64_t k = rng.next_below(4096);  // R in [0, 4)
    std::uint64_t n = rng.next_below(100000);
    double ratio = static_cast<double>(k) / 1024.0;
    std::uint64_t expected = (2 * k * n + 1024) / 2048;
    CHECK(augmentation_target(ratio, n) == expected);
  }
}

TEST_CASE("plan_augmentation balances classes and samples without replacement") {
  SUBCASE("even target splits evenly") {
    std::vector<Session> pool = make_pool(50, 50);
    AugPlan plan = plan_augmentation(1000, pool, 0.01, 42);
    CHECK(plan.n_syn_target == 10);
    CHECK(plan.picks.size() == 10);
    CHECK(plan.picked_normal == 5);
    CHECK(plan.picked_anomalous == 5);
    CHECK_FALSE(plan.pool_limited);
    std::set<std::string> unique(plan.picks.begin(), plan.picks.end());
    CHECK(unique.size() == plan.picks.size());
  }
  SUBCASE("odd target gives the extra pick to the normal class") {
    std::vector<Session> pool = make_pool(50, 50);
    AugPlan plan = plan_augmentation(700, pool, 0.01, 42);
    CHECK(plan.n_syn_target == 7);
    CHECK(plan.picked_normal == 4);
    CHECK(plan.picked_anomalous == 3);
  }
  SUBCASE("ratio zero yields an empty plan") {
    std::vector<Session> pool = make_pool(5, 5);
    AugPlan plan = plan_augmentation(1000, pool, 0.0, 42);
    CHECK(plan.n_syn_target == 0);
    CHECK(plan.picks.empty());
    CHECK_FALSE(plan.pool_limited);
  }
  SUBCASE("shortfall in one class is filled from the other and flagged") {
    std::vector<Session> pool = make_pool(2, 50);  // only 2 normals
    AugPlan plan = plan_augmentation(1000, pool, 0.01, 42);
    CHECK(plan.picks.size() == 10);
    CHECK(plan.picked_normal == 2);
    CHECK(plan.picked_anomalous == 8);
    CHECK(plan.pool_limited);
  }
  SUBCASE("a pool smaller than the target is a hard error") {
    std::vector<Session> pool = make_pool(3, 3);
    CHECK_THROWS_AS(plan_augmentation(1000, pool, 0.01, 42), StageError);
    try {
      plan_augmentation(1000, pool, 0.01, 42);
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("4") != std::string::npos);  // deficit named
    }
  }
  SUBCASE("negative ratio is a configuration error") {
    std::vector<Session> pool = make_pool(3, 3);
    CHECK_THROWS_AS(plan_augmentation(10, pool, -0.5, 42), ConfigError);
  }
  SUBCASE("same seed, same plan; different seed, different sample") {
    std::vector<Session> pool = make_pool(100, 100);
    AugPlan a = plan_augmentation(2000, pool, 0.05, 42);
    AugPlan b = plan_augmentation(2000, pool, 0.05, 42);
    CHECK(a.picks == b.picks);
    AugPlan c = plan_augmentation(2000, pool, 0.05, 43);
    CHECK(a.picks != c.picks);
    CHECK(a.render_json() == b.render_json());
  }
  SUBCASE("randomized pools keep the balance invariant") {
    util::SplitMix64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t normals = rng.next_below(30);
      std::size_t anoms = rng.next_below(30);
      std::vector<Session> pool = make_pool(normals, anoms);
      std::size_t n_real = rng.next_below(50);
      double ratio = static_cast<double>(rng.next_below(1024)) / 1024.0;
      std::size_t target = augmentation_target(ratio, n_real);
      if (target > pool.size()) {
        CHECK_THROWS_AS(plan_augmentation(n_real, pool, ratio, trial), StageError);
        continue;
      }
      AugPlan plan = plan_augmentation(n_real, pool, ratio, trial);
      CHECK(plan.picks.size() == target);
      CHECK(plan.picked_normal + plan.picked_anomalous == target);
      std::set<std::string> unique(plan.picks.begin(), plan.picks.end());
      CHECK(unique.size() == plan.picks.size());
      std::size_t want_normal = (target + 1) / 2;
      std::size_t want_anom = target / 2;
      if (normals >= want_normal && anoms >= want_anom) {
        CHECK_FALSE(plan.pool_limited);
        std::size_t diff = plan.picked_normal > plan.picked_anomalous
                               ? plan.picked_normal - plan.picked_anomalous
                               : plan.picked_anomalous - plan.picked_normal;
        CHECK(diff <= 1);
      } else if (target > 0) {
        CHECK(plan.pool_limited);
      }
    }
  }
}

TEST_CASE("apply_augmentation appends to train only, in plan order") {
  DatasetSplit split = make_clean_split(100, 0, 40);
  std::vector<Session> pool = make_pool(30, 30);
  AugPlan plan = plan_augmentation(1000, pool, 0.01, 42);
  std::string test_before = sessions_to_text(split.test);

  DatasetSplit out = apply_augmentation(split, pool, plan);
  CHECK(out.train.size() == 110);
  CHECK(out.test.size() == 40);
  CHECK(sessions_to_text(out.test) == test_before);
  for (std::size_t i = 0; i < plan.picks.size(); ++i)
    CHECK(out.train[100 + i].session_id == plan.picks[i]);

  // Original split untouched; a second application is byte-identical.
  CHECK(split.train.size() == 100);
  DatasetSplit again = apply_augmentation(split, pool, plan);
  CHECK(sessions_to_text(again.train) == sessions_to_text(out.train));

  SUBCASE("a pick missing from the pool is a hard error") {
    AugPlan broken = plan;
    broken.picks[0] = "no-such-id";
    CHECK_THROWS_AS(apply_augmentation(split, pool, broken), StageError);
  }
}

TEST_CASE("split_guard accepts clean splits and catches every injected leak") {
  SUBCASE("clean split passes") {
    DatasetSplit split = make_clean_split(20, 10, 15);
    GuardReport rep = split_guard(split);
    CHECK(rep.ok);
    CHECK(rep.synthetic_in_test.empty());
    CHECK(rep.duplicated_ids.empty());
    CHECK(rep.render().find("OK") != std::string::npos);
  }
  SUBCASE("fuzz: 100 mutated splits, 100% detection") {
    util::SplitMix64 rng(99);
    int detected = 0;
    for (int trial = 0; trial < 100; ++trial) {
      DatasetSplit split = make_clean_split(20, 10, 15);
      int kind = static_cast<int>(rng.next_below(3));
      std::string injected;
      if (kind == 0) {
        // A synthetic train session copied into test.
        const Session& victim = split.train[20 + rng.next_below(10)];
        injected = victim.session_id;
        split.test.push_back(victim);
      } else if (kind == 1) {
        // A fresh synthetic session planted straight into test.
        injected = "fresh-syn-" + std::to_string(trial);
        split.test.push_back(mk_session(injected, "anomalous", "synthetic"));
      } else {
        // A real session duplicated across train and test.
        const Session& victim = split.train[rng.next_below(20)];
        injected = victim.session_id;
        split.test.push_back(victim);
      }
      GuardReport rep = split_guard(split);
      REQUIRE_FALSE(rep.ok);
      bool listed =
          std::find(rep.synthetic_in_test.begin(), rep.synthetic_in_test.end(), injected) !=
              rep.synthetic_in_test.end() ||
          std::find(rep.duplicated_ids.begin(), rep.duplicated_ids.end(), injected) !=
              rep.duplicated_ids.end();
      REQUIRE_MESSAGE(listed, "trial ", trial, " injected ", injected);
      CHECK(rep.render().find(injected) != std::string::npos);
      ++detected;
    }
    CHECK(detected == 100);
  }
  SUBCASE("kind classification is precise") {
    DatasetSplit split = make_clean_split(5, 2, 3);
    split.test.push_back(split.train[5]);  // synthetic, also duplicated
    GuardReport rep = split_guard(split);
    CHECK_FALSE(rep.ok);
    REQUIRE(rep.synthetic_in_test.size() == 1);
    CHECK(rep.synthetic_in_test[0] == split.train[5].session_id);
    REQUIRE(rep.duplicated_ids.size() == 1);
    CHECK(rep.duplicated_ids[0] == split.train[5].session_id);
  }
}

TEST_CASE("session files are line-delimited with a fixed field order") {
  std::vector<Session> sessions;
  sessions.push_back(mk_session("s1", "normal", "real",
                                {{"INFO", "block blk_1 from /10.0.0.5:9866"}}));
  sessions.push_back(mk_session("s2", "anomalous", "synthetic",
                                {{"ERROR", "quote \" backslash \\ and unicode é"},
                                 {"WARN", "second event"}}));
  // Evidence is not part of the file format and must not leak into it.
  sessions[1].evidence.push_back({RuleKind::Severity, 0, "ERROR"});

  std::string text = sessions_to_text(sessions);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.back() == '\n');
  CHECK(text.find("evidence") == std::string::npos);
  CHECK(text.find("method_id") == std::string::npos);

  std::string line1 = text.substr(0, text.find('\n'));
  std::size_t p_id = line1.find("\"session_id\"");
  std::size_t p_label = line1.find("\"label\"");
  std::size_t p_prov = line1.find("\"provenance\"");
  std::size_t p_ctx = line1.find("\"context\"");
  std::size_t p_events = line1.find("\"events\"");
  REQUIRE(p_id != std::string::npos);
  CHECK(p_id < p_label);
  CHECK(p_label < p_prov);
  CHECK(p_prov < p_ctx);
  CHECK(p_ctx < p_events);
  std::size_t p_tid = line1.find("\"template_id\"");
  std::size_t p_level = line1.find("\"level\"");
  std::size_t p_msg = line1.find("\"message\"");
  CHECK(p_tid < p_level);
  CHECK(p_level < p_msg);

  SUBCASE("text round-trips exactly") {
    std::vector<Session> back = sessions_from_text(text, "mem");
    REQUIRE(back.size() == 2);
    CHECK(back[0].session_id == "s1");
    CHECK(back[1].label == "anomalous");
    CHECK(back[1].provenance == "synthetic");
    CHECK(back[1].context == "ctx for s2");
    REQUIRE(back[1].events.size() == 2);
    CHECK(back[1].events[0].message == "quote \" backslash \\ and unicode é");
    CHECK(back[1].events[0].template_id == 1);
    CHECK(sessions_to_text(back) == text);
  }

  SUBCASE("file round-trips exactly") {
    std::string path = temp_path("rt");
    write_sessions(sessions, path);
    std::vector<Session> back = read_sessions(path);
    CHECK(sessions_to_text(back) == text);
    std::remove(path.c_str());
  }

  SUBCASE("empty inputs give empty outputs") {
    CHECK(sessions_from_text("", "mem").empty());
    CHECK(sessions_to_text({}).empty());
  }

  SUBCASE("malformed lines name the line number") {
    std::string bad = text + "{\"session_id\": truncated\n";
    try {
      sessions_from_text(bad, "mem");
      FAIL("expected a parse error");
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("mem:3") != std::string::npos);
    }
  }

  SUBCASE("wrong field types name the line number") {
    std::string bad =
        "{\"session_id\":\"x\",\"label\":5,\"provenance\":\"real\",\"context\":\"\","
        "\"events\":[]}\n";
    try {
      sessions_from_text(bad, "mem");
      FAIL("expected a schema error");
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("mem:1") != std::string::npos);
    }
  }

  SUBCASE("unknown label values are rejected") {
    std::string bad =
        "{\"session_id\":\"x\",\"label\":\"weird\",\"provenance\":\"real\",\"context\":\"\","
        "\"events\":[]}\n";
    CHECK_THROWS_AS(sessions_from_text(bad, "mem"), StageError);
  }

  SUBCASE("missing file names the path") {
    CHECK_THROWS_AS(read_sessions("/nonexistent/dir/file.jsonl"), StageError);
  }
}

TEST_CASE("plan render_json is a stable machine-readable summary") {
  std::vector<Session> pool = make_pool(10, 10);
  AugPlan plan = plan_augmentation(100, pool, 0.1, 42);
  std::string js = plan.render_json();
  CHECK(js.find("\"ratio\"") != std::string::npos);
  CHECK(js.find("\"n_real\"") != std::string::npos);
  CHECK(js.find("\"n_syn_target\"") != std::string::npos);
  CHECK(js.find("\"picked_normal\"") != std::string::npos);
  CHECK(js.find("\"picked_anomalous\"") != std::string::npos);
  CHECK(js.find("\"pool_limited\"") != std::string::npos);
  CHECK(js.find("\"picks\"") != std::string::npos);
}
