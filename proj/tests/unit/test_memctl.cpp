#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "scenemem/common/text_io.hpp"
#include "scenemem/features/feature_vector.hpp"
#include "scenemem/memctl/cli.hpp"
#include "scenemem/memctl/config.hpp"
#include "scenemem/memctl/sessions.hpp"

using namespace scenemem;
using namespace scenemem::memctl;
using nlohmann::json;
using testkit::TempDir;

namespace {

gamelab::LevelPlan level(std::uint64_t seed, const std::string& id) {
  const auto c = testkit::synthetic_corpus(66, 30, 12);
  return gamelab::schedule_level(c.ids(corpus::Role::target), c.ids(corpus::Role::filler),
                                 c.ids(corpus::Role::vigilance), seed, {}, id);
}

ServiceOptions fixed_clock() {
  ServiceOptions o;
  auto t = std::make_shared<std::int64_t>(1'000'000);
  o.clock = [t] { return *t += 1770; };
  return o;
}

gamelab::ResponseEvent response(int slot, bool pressed) {
  gamelab::ResponseEvent r;
  r.slot_index = slot;
  r.pressed = pressed;
  if (pressed) r.reaction_ms = 500;
  return r;
}

// Presses exactly on repeats; runs `count` slots or to the end.
void play(SessionManager& m, const std::string& id, int count = 1 << 20) {
  for (int k = 0; k < count; ++k) {
    const auto next = m.next(id);
    if (next.done) return;
    const auto& slot = m.state(id).plan.slots[next.slot_index];
    m.respond(id, response(next.slot_index, slot.exposure == gamelab::Exposure::repeat));
  }
}

struct CliResult {
  int code;
  std::string out, err;
  json report() const { return json::parse(out.substr(0, out.find('\n'))); }
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "memctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    const auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

// ---- config ----

TEST(Config, DefaultsAndRelativePaths) {
  TempDir dir;
  write_text_file(dir / "corpus.jsonl", "");
  write_json_file(dir / "run.json", {{"manifest", "corpus.jsonl"}, {"T", 80}, {"port", 9000},
                                     {"timing", {{"display_ms", 900}}},
                                     {"training", {{"epochs", 7}}},
                                     {"network", {{"input_size", 32}, {"baseline", {{"channels", {4, 8}}}}}}});
  const auto c = load_run_config(dir / "run.json", env_of({}));
  EXPECT_EQ(c.manifest, dir / "corpus.jsonl");
  EXPECT_EQ(c.horizon, 80);
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.timing.display_ms, 900);
  EXPECT_EQ(c.timing.gap_ms, 770);
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.network.input_size, 32u);
  EXPECT_EQ(c.network.baseline.channels, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(c.data_dir, dir / "data");
  EXPECT_FALSE(c.svr_grid.has_value());
}

TEST(Config, RejectsUnknownKeysMissingPathsAndBadValues) {
  TempDir dir;
  auto load = [&](const json& j) {
    write_json_file(dir / "run.json", j);
    return load_run_config(dir / "run.json", env_of({}));
  };
  try {
    load({{"prot", 1}});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("prot"), std::string::npos);
  }
  try {
    load({{"levels_dir", "nowhere"}});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("levels_dir"), std::string::npos);
  }
  EXPECT_THROW(load({{"T", 0}}), std::runtime_error);
  EXPECT_THROW(load({{"port", "x"}}), std::runtime_error);
  EXPECT_THROW(load(json::array()), std::runtime_error);
}

TEST(Config, EnvironmentOverridesFile) {
  TempDir dir;
  write_json_file(dir / "run.json", {{"port", 9000}, {"data_dir", "d"}});
  const auto c = load_run_config(dir / "run.json", env_of({{"MEMCTL_PORT", "7001"}, {"MEMCTL_DATA_DIR", "/tmp/x"}}));
  EXPECT_EQ(c.port, 7001);
  EXPECT_EQ(c.data_dir, "/tmp/x");
  RunConfig d;
  EXPECT_THROW(apply_env_overrides(d, env_of({{"MEMCTL_PORT", "80a"}})), std::runtime_error);
  EXPECT_THROW(apply_env_overrides(d, env_of({{"MEMCTL_PORT", "70000"}})), std::runtime_error);
}

TEST(Config, JsonRoundTrip) {
  TempDir dir;
  RunConfig c;
  c.svr_grid = kernreg::HyperGrid{{1, 2}, {0.1}, {0.5}};
  c.seed = 9;
  c.data_dir = dir / "sessions";
  write_json_file(dir / "run.json", to_json(c));
  const auto back = load_run_config(dir / "run.json", env_of({}));
  EXPECT_EQ(to_json(back), to_json(c));
}

// ---- sessions ----

TEST(Sessions, CreateThenNextServesSlotZero) {
  TempDir dir;
  SessionManager m(dir.path(), {level(1, "a")}, fixed_clock());
  const auto s = m.create("alice");
  EXPECT_EQ(s.session_id, "S000001");
  EXPECT_EQ(s.length(), 186);
  const auto n = m.next(s.session_id);
  EXPECT_FALSE(n.done);
  EXPECT_EQ(n.slot_index, 0);
  EXPECT_EQ(n.image_id, s.plan.slots[0].image_id);
  EXPECT_EQ(n.upcoming, (std::vector<std::string>{s.plan.slots[1].image_id, s.plan.slots[2].image_id}));
  // asking again before responding re-serves the same slot without a new event
  EXPECT_EQ(m.next(s.session_id).slot_index, 0);
  EXPECT_EQ(m.state(s.session_id).events.size(), 1u);
}

TEST(Sessions, OrderingConflictsUnknownSessionsAndDuplicates) {
  TempDir dir;
  SessionManager m(dir.path(), {level(1, "a")}, fixed_clock());
  const auto id = m.create("bob").session_id;
  auto status_of = [&](auto&& call) {
    try {
      call();
    } catch (const SessionError& e) {
      return e.status();
    }
    return 200;
  };
  EXPECT_EQ(status_of([&] { m.respond(id, response(0, false)); }), 409);  // not yet served
  m.next(id);
  EXPECT_EQ(status_of([&] { m.respond(id, response(1, false)); }), 409);
  EXPECT_EQ(status_of([&] { m.respond(id, response(186, false)); }), 400);
  EXPECT_EQ(status_of([&] { m.next("S999999"); }), 404);
  EXPECT_EQ(status_of([&] { m.respond("nope", response(0, false)); }), 404);
  EXPECT_EQ(status_of([&] { m.create(""); }), 400);
  EXPECT_EQ(status_of([&] { m.create("x", std::string("missing")); }), 400);

  const auto first = m.respond(id, response(0, true));
  EXPECT_FALSE(first.duplicate);
  const auto events = m.state(id).events.size();
  const auto again = m.respond(id, response(0, false));
  EXPECT_TRUE(again.duplicate);
  EXPECT_EQ(again.slot_index, 0);
  EXPECT_EQ(m.state(id).events.size(), events);
  // first write wins
  EXPECT_TRUE(std::get<gamelab::ResponseEvent>(m.state(id).events.back()).pressed);
}

TEST(Sessions, FullSessionCompletesAndPassesVigilance) {
  TempDir dir;
  SessionManager m(dir.path(), {level(2, "a")}, fixed_clock());
  const auto id = m.create("carol").session_id;
  play(m, id);
  const auto s = m.state(id);
  EXPECT_EQ(s.status, SessionStatus::complete);
  EXPECT_EQ(s.cursor, 186);
  EXPECT_EQ(s.events.size(), 2u * 186u);
  EXPECT_TRUE(m.next(id).done);
  const auto sum = m.summary(id);
  EXPECT_TRUE(sum.vigilance.pass);
  EXPECT_EQ(sum.vigilance.vigilance_hits, 12);
  EXPECT_EQ(to_json(sum)["status"], "complete");
  EXPECT_TRUE(m.respond(id, response(185, false)).duplicate);
  EXPECT_TRUE(gamelab::validate_level(s.plan).empty());
}

TEST(Sessions, FeedbackFlags) {
  TempDir dir;
  auto opts = fixed_clock();
  opts.feedback_false_alarm = true;
  SessionManager m(dir.path(), {level(3, "a")}, opts);
  const auto id = m.create("dan").session_id;
  bool saw_miss = false, saw_fa = false;
  for (;;) {
    const auto n = m.next(id);
    if (n.done) break;
    const auto& slot = m.state(id).plan.slots[n.slot_index];
    // never press: every vigilance repeat is a miss
    const bool pressed = slot.exposure == gamelab::Exposure::first && slot.role == corpus::Role::filler;
    const auto ack = m.respond(id, response(n.slot_index, pressed));
    if (slot.role == corpus::Role::vigilance && slot.exposure == gamelab::Exposure::repeat) {
      EXPECT_EQ(ack.feedback, "vigilance_miss");
      saw_miss = true;
    } else if (pressed) {
      EXPECT_EQ(ack.feedback, "false_alarm");
      saw_fa = true;
    } else {
      EXPECT_EQ(ack.feedback, "");
    }
  }
  EXPECT_TRUE(saw_miss && saw_fa);
  EXPECT_FALSE(m.summary(id).vigilance.pass);
}

TEST(Sessions, ReplayReconstructsStateExactly) {
  TempDir dir;
  std::vector<SessionState> before;
  {
    SessionManager m(dir.path(), {level(4, "a"), level(5, "b")}, fixed_clock());
    const auto a = m.create("eve").session_id;
    const auto b = m.create("fay").session_id;
    const auto c = m.create("gus").session_id;
    play(m, a);
    play(m, b, 37);
    m.next(b);  // served but unanswered
    play(m, c, 5);
    m.abandon(c);
    for (const auto& id : m.session_ids()) {
      before.push_back(m.state(id));
      EXPECT_EQ(replay_session(m.log_path(id)), m.state(id)) << id;
    }
  }
  SessionManager restarted(dir.path(), {level(4, "a"), level(5, "b")}, fixed_clock());
  ASSERT_EQ(restarted.session_ids().size(), 3u);
  for (const auto& s : before) EXPECT_EQ(restarted.state(s.session_id), s);
  // the interrupted session continues with the slot it was waiting on
  const auto b = before[1].session_id;
  EXPECT_EQ(restarted.next(b).slot_index, 37);
  play(restarted, b);
  EXPECT_EQ(restarted.state(b).status, SessionStatus::complete);
  EXPECT_EQ(restarted.state(before[2].session_id).status, SessionStatus::abandoned);
  EXPECT_TRUE(restarted.next(before[2].session_id).done);
  // ids keep counting past the resumed ones
  EXPECT_EQ(restarted.create("hal").session_id, "S000004");
  // the log is readable as an ordinary session log
  const auto log = gamelab::read_session_log(restarted.log_path(b));
  EXPECT_EQ(log.events.size(), 2u * 186u);
}

TEST(Sessions, ReplayRejectsInconsistentLogs) {
  TempDir dir;
  {
    SessionManager m(dir.path(), {level(6, "a")}, fixed_clock());
    const auto id = m.create("ivy").session_id;
    play(m, id, 3);
  }
  const auto path = dir / "session_S000001.jsonl";
  auto text = read_text_file(path);
  auto lines = std::vector<std::string>{};
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  // drop the second stimulus so the following response is out of order
  std::string broken;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i != 3) broken += lines[i] + "\n";
  }
  write_text_file(dir / "broken.jsonl", broken);
  EXPECT_THROW(replay_session(dir / "broken.jsonl"), std::runtime_error);
  write_text_file(dir / "headless.jsonl", lines[1] + "\n");
  EXPECT_THROW(replay_session(dir / "headless.jsonl"), std::runtime_error);
}

TEST(Sessions, LevelAssignment) {
  TempDir dir;
  SessionManager m(dir.path(), {level(7, "a"), level(8, "b")}, fixed_clock(), {{"kim", "b"}});
  EXPECT_EQ(m.create("kim").plan.level_id, "b");
  EXPECT_EQ(m.create("lee", std::string("a")).plan.level_id, "a");
  const auto x = m.create("x").plan.level_id;
  const auto y = m.create("y").plan.level_id;
  EXPECT_NE(x, y);
  EXPECT_THROW(SessionManager(dir / "other", {level(7, "a")}, {}, {{"kim", "zzz"}}), std::invalid_argument);
  EXPECT_THROW(SessionManager(dir / "other", {}), std::invalid_argument);
  EXPECT_THROW(SessionManager(dir / "other", {level(7, "a"), level(8, "a")}), std::invalid_argument);
}

TEST(Sessions, ShownAtIsStrictlyIncreasingEvenWithAStoppedClock) {
  TempDir dir;
  ServiceOptions o;
  o.clock = [] { return std::int64_t{5}; };
  SessionManager m(dir.path(), {level(9, "a")}, o);
  const auto id = m.create("z").session_id;
  play(m, id, 10);
  std::int64_t last = -1;
  for (const auto& e : m.state(id).events) {
    if (const auto* s = std::get_if<gamelab::StimulusEvent>(&e)) {
      EXPECT_GT(s->shown_at_ms, last);
      last = s->shown_at_ms;
    }
  }
}

// ---- CLI ----

TEST(Cli, HelpUnknownFlagAndRuntimeErrors) {
  const auto help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("score"), std::string::npos);

  const auto bad = cli({"score", "compute", "--logs", ".", "--frobnicate"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("usage error"), std::string::npos);
  EXPECT_NE(bad.err.find("frobnicate"), std::string::npos);

  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"corpus"}).code, 2);
  EXPECT_EQ(cli({"features", "extract", "--kind", "colour", "--manifest", "x", "--out", "y"}).code, 2);

  TempDir dir;
  const auto missing = cli({"corpus", "import", "--manifest", (dir / "none.jsonl").string()});
  EXPECT_EQ(missing.code, 1);
  ASSERT_EQ(missing.err.rfind("error: ", 0), 0u) << missing.err;
  const auto e = json::parse(missing.err.substr(7));
  EXPECT_EQ(e["command"], "corpus import");
  EXPECT_FALSE(e["error"].get<std::string>().empty());
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  TempDir dir;
  testkit::ImageCorpusOptions opts;
  opts.targets = 3;
  const auto manifest = testkit::write_image_corpus(dir.path(), opts);
  write_json_file(dir / "run.json", {{"manifest", manifest.string()}});
  const auto r = cli({"--config", (dir / "run.json").string(), "corpus", "import"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["targets"], 3);
  write_json_file(dir / "bad.json", {{"nonsense", 1}});
  EXPECT_EQ(cli({"--config", (dir / "bad.json").string(), "corpus", "import"}).code, 1);
}

TEST(Cli, EndToEndPipeline) {
  TempDir dir;
  testkit::ImageCorpusOptions opts;
  opts.targets = 66;
  opts.fillers = 30;
  opts.vigilance = 12;
  opts.width = 20;
  opts.height = 16;
  opts.categories = 3;
  const auto manifest = testkit::write_image_corpus(dir.path(), opts).string();
  const auto p = [&](const char* name) { return (dir / name).string(); };

  auto r = cli({"corpus", "import", "--manifest", manifest, "--out", p("normalized.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report(), (json{{"images", 108}, {"targets", 66}, {"fillers", 30}, {"vigilance", 12}}));

  r = cli({"corpus", "split", "--manifest", manifest, "--train", "40", "--seed", "3", "--out", p("split.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["test"], 26);

  r = cli({"game", "schedule", "--manifest", manifest, "--levels", "2", "--seed", "5", "--out-dir", p("levels")});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(r.report()["levels"].size(), 2u);
  std::vector<gamelab::LevelPlan> plans;
  const auto level_ids = r.report()["levels"];
  for (const auto& id : level_ids) {
    plans.push_back(gamelab::load_level(dir / "levels" / ("level_" + id.get<std::string>() + ".json")));
    EXPECT_TRUE(gamelab::validate_level(plans.back()).empty());
  }

  // sessions through the service: target memorability falls with the numeric id
  {
    SessionManager m(dir / "data", plans, fixed_clock());
    Rng rng(1);
    for (int s = 0; s < 24; ++s) {
      const auto id = m.create("subject" + std::to_string(s)).session_id;
      for (;;) {
        const auto n = m.next(id);
        if (n.done) break;
        const auto& slot = m.state(id).plan.slots[n.slot_index];
        bool pressed = false;
        if (slot.exposure == gamelab::Exposure::repeat) {
          pressed = slot.role != corpus::Role::target ||
                    rng.uniform() < 0.95 - 0.012 * std::stoi(slot.image_id.substr(1));
        }
        m.respond(id, response(n.slot_index, pressed));
      }
    }
    // one session that fails the vigilance check
    const auto lazy = m.create("lazy").session_id;
    for (int k = 0; k < 186; ++k) m.respond(lazy, response(m.next(lazy).slot_index, false));
  }

  r = cli({"score", "compute", "--logs", p("data"), "--out", p("scores.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["sessions"], 25);
  EXPECT_EQ(r.report()["rejected_sessions"].size(), 1u);
  EXPECT_EQ(r.report()["scored"], 66);
  const auto scores = gamelab::load_scores(p("scores.csv"));
  ASSERT_EQ(scores.size(), 66u);

  r = cli({"score", "consistency", "--logs", p("data"), "--repeats", "5", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(r.report()["mean_srcc"].get<double>(), 0.3);

  r = cli({"features", "extract", "--kind", "pixels", "--manifest", manifest, "--out", p("pixels.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["count"], 66);
  EXPECT_EQ(r.report()["dim"], 3072);
  r = cli({"features", "extract", "--kind", "saliency_grid", "--manifest", manifest, "--out", p("sal.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["dim"], 1024);
  EXPECT_EQ(features::load_feature_set(p("sal.bin")).rows.size(), 66u);

  r = cli({"svr", "train", "--features", p("pixels.bin"), "--features", p("sal.bin"), "--kernel", "rbf",
           "--scores", p("scores.csv"), "--manifest", manifest, "--split", p("split.json"), "--folds", "3",
           "--seed", "4", "--out", p("model.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["n_train"], 40);
  const auto model = read_json_file(p("model.json"));
  EXPECT_EQ(model["training"]["n_train"], 40);
  EXPECT_TRUE(model["training"].contains("cv"));

  r = cli({"svr", "eval", "--model", p("model.json"), "--features", p("pixels.bin"), "--features", p("sal.bin"),
           "--scores", p("scores.csv"), "--manifest", manifest, "--split", p("split.json"), "--out", p("pred.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["n"], 26);
  EXPECT_TRUE(std::filesystem::exists(p("pred.csv")));

  // tiny network so the neural commands run in a moment
  write_json_file(dir / "run.json",
                  {{"manifest", manifest},
                   {"network", {{"input_size", 16}, {"baseline", {{"channels", {2, 2}}}}, {"category", {{"channels", {2, 2}}}},
                                {"deep_dim", 4}, {"cat_dim", 3}, {"hidden_dim", 4}}}});
  write_json_file(dir / "vocab.json", json::array({"c0", "c1", "c2"}));
  const auto cfg = p("run.json");
  r = cli({"--config", cfg, "nsm", "pretrain-category", "--vocabulary", p("vocab.json"), "--split", p("split.json"),
           "--out-dir", p("nsm"), "--epochs", "2", "--batch", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"--config", cfg, "nsm", "pretrain-baseline", "--scores", p("scores.csv"), "--split", p("split.json"),
           "--out-dir", p("nsm"), "--epochs", "2", "--batch", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"--config", cfg, "nsm", "train", "--scores", p("scores.csv"), "--split", p("split.json"), "--baseline",
           p("nsm/baseline_branch.bin"), "--category", p("nsm/category_branch.bin"), "--out-dir", p("nsm"),
           "--epochs", "2", "--batch", "8", "--freeze-baseline"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(p("nsm/training_log.csv")));
  r = cli({"nsm", "predict", "--checkpoint", p("nsm/deepnsm.bin"), "--manifest", manifest, "--split", p("split.json"),
           "--scores", p("scores.csv"), "--out", p("nsm_pred.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["n"], 26);
  EXPECT_EQ(r.report()["kind"], "deepnsm");
  r = cli({"nsm", "extract-deep", "--checkpoint", p("nsm/deepnsm.bin"), "--manifest", manifest, "--out", p("deep.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report()["count"], 66);
  EXPECT_EQ(r.report()["dim"], 4);

  r = cli({"report", "category-stats", "--scores", p("scores.csv"), "--manifest", manifest, "--vocabulary",
           p("vocab.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("category", 0), 0u) << r.out;
}
