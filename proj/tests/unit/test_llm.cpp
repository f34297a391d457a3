#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "perfsampler/perfsampler.hpp"

using namespace perfsampler;
using namespace perfsampler::llm;

namespace {

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

ChatRequest make_request(RoleTag role, int iteration, std::string text) {
  ChatRequest r;
  r.role = role;
  r.iteration = iteration;
  r.messages.push_back({Speaker::user, std::move(text)});
  return r;
}

Configuration cfg(std::int64_t x) {
  Configuration c;
  c.set("x", x);
  return c;
}

}  // namespace

TEST(Extract, PrefersFencedBlocksThenBalancedSpans) {
  const Schema s{{{"keep", JsonKind::string_list, true}}};
  EXPECT_EQ(extract_structured("Sure!\n```json\n{\"keep\": [\"a\"]}\n```\nDone", s)["keep"][0], "a");
  EXPECT_EQ(extract_structured("noise {\"other\": 1} then {\"keep\": [\"b\"]} tail", s)["keep"][0], "b");
  EXPECT_EQ(extract_structured("text {\"keep\": [\"}\"]}", s)["keep"][0], "}");
  EXPECT_EQ(error_code([&] { extract_structured("no json here", s); }), Errc::no_json_found);
  EXPECT_EQ(error_code([&] { extract_structured("{\"keep\": 3}", s); }), Errc::schema_mismatch);
}

TEST(MockScript, LookupPrecedence) {
  const auto script = MockScript::from_json(Json::parse(R"({"entries": [
      {"role_tag": "generator", "iteration": "*", "response": "wild"},
      {"role_tag": "generator", "iteration": "*", "matcher": "#2", "response": "wild-match"},
      {"role_tag": "generator", "iteration": 1, "response": "exact"},
      {"role_tag": "generator", "iteration": 1, "matcher": "#2", "response": "exact-match"}]})"));
  const MockBackend backend(script);
  EXPECT_EQ(backend.complete(make_request(RoleTag::generator, 1, "generator #2")).text, "exact-match");
  EXPECT_EQ(backend.complete(make_request(RoleTag::generator, 1, "generator #1")).text, "exact");
  EXPECT_EQ(backend.complete(make_request(RoleTag::generator, 5, "generator #2")).text, "wild-match");
  EXPECT_EQ(backend.complete(make_request(RoleTag::generator, 5, "generator #1")).text, "wild");
  EXPECT_EQ(error_code([&] { backend.complete(make_request(RoleTag::filter, 0, "")); }), Errc::no_script_entry);
}

TEST(MockScript, JsonResponsesAreFenced) {
  const auto script = MockScript::from_json(
      Json::parse(R"({"entries": [{"role_tag": "filter", "iteration": 0, "response": {"keep": ["a"]}}]})"));
  EXPECT_EQ(script.entries().front().response.rfind("```json\n", 0), 0u);
  EXPECT_EQ(MockScript::from_json(script.to_json()).to_json().dump(), script.to_json().dump());
  EXPECT_EQ(error_code([] { MockScript::from_json(Json::parse(R"({"entries": [{"role_tag": "filter", "iteration": "x", "response": ""}]})")); }),
            Errc::malformed_json);
}

TEST(Prompts, FilesMatchBuiltins) {
  const auto disk = PromptSet::load(PERFSAMPLER_PROMPT_DIR);
  const auto builtin = PromptSet::builtin();
  for (auto role : {RoleTag::filter, RoleTag::analyzer, RoleTag::designer, RoleTag::generator}) {
    EXPECT_EQ(disk.for_role(role).serialize(), builtin.for_role(role).serialize()) << to_string(role);
    EXPECT_EQ(PromptTemplate::parse(builtin.for_role(role).serialize()).serialize(), builtin.for_role(role).serialize());
  }
  EXPECT_EQ(render("a {x} {y} {z", {{"x", "1"}, {"y", "{x}"}}), "a 1 {x} {z");
}

TEST(Voting, FrequencyThenFirstSeen) {
  const std::vector<std::vector<Configuration>> lists{{cfg(1), cfg(2), cfg(3)}, {cfg(3), cfg(4)}, {cfg(4), cfg(3), cfg(3)}};
  const auto v = vote_candidates(lists, {}, 3);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].configuration, cfg(3));
  EXPECT_EQ(v[0].votes, 3u);  // duplicates within a list count once
  EXPECT_EQ(v[1].configuration, cfg(4));
  EXPECT_EQ(v[2].configuration, cfg(1));
  const auto w = vote_candidates(lists, {cfg(3)}, 10);
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].configuration, cfg(4));
}

TEST(Budget, Validation) {
  EXPECT_EQ(error_code([] { SamplingBudget{5, 7, 3}.validate(); }), Errc::invalid_argument);
  EXPECT_EQ(error_code([] { SamplingBudget{5, 5, 0}.validate(); }), Errc::invalid_argument);
  EXPECT_NO_THROW((SamplingBudget{7, 7, 1}.validate()));
}

namespace {

struct RunningExample {
  DatasetEntry data = dataset_from_json(
      Json{{"name", "LRZIP"}, {"csv", "measurements.csv"}, {"space", "space.json"}, {"docs", "docs.json"}},
      std::filesystem::path(PERFSAMPLER_DATA_DIR) / "lrzip");
  MockScript script = MockScript::load(std::string(PERFSAMPLER_DATA_DIR) + "/lrzip/mock_running_example.json");

  // The scripted example covers three iterations; past that, repeat its last
  // analysis and strategy and let generators come back empty.
  MockScript extended() const {
    MockScript s = script;
    for (const auto& e : script.entries()) {
      if ((e.role == RoleTag::analyzer || e.role == RoleTag::designer) && e.iteration == 3) {
        s.add({e.role, std::nullopt, std::nullopt, e.response});
      }
    }
    s.add({RoleTag::generator, std::nullopt, std::nullopt, "```json\n{\"configurations\": []}\n```"});
    return s;
  }
};

}  // namespace

TEST(Pipeline, FilterDropsDocumentedNoOp) {
  RunningExample ex;
  const MockBackend backend(ex.script);
  LlmSession session(backend);
  const auto f = filter_options(ex.data.full->space->space(), ex.data.docs, session);
  EXPECT_EQ(f.kept, (std::set<std::string>{"-L", "-p", "-w", "algorithm"}));
  EXPECT_EQ(f.rationale["-N"]["decision"], "drop");
  EXPECT_EQ(session.counts().filter, 1u);
  // Missing documentation is an error before any call.
  std::vector<ConfigOption> partial(ex.data.docs.begin(), ex.data.docs.end() - 1);
  EXPECT_EQ(error_code([&] { filter_options(ex.data.full->space->space(), partial, session); }), Errc::missing_documentation);
}

TEST(Pipeline, LoopMeasuresExactlyTheBudget) {
  RunningExample ex;
  const MockBackend backend(ex.extended());
  const DatasetOracle oracle(ex.data.full);
  for (std::size_t total : {1u, 6u, 20u, 33u}) {
    LlmSession session(backend);
    const auto r = run_sampling_loop(ex.data.full->space->space(), ex.data.docs, {total, std::min<std::size_t>(7, total), 3},
                                     oracle, ex.data.full->metrics, session, 4);
    EXPECT_EQ(r.outcome.sampled.size(), total);
    std::set<Configuration> distinct(r.outcome.sampled.begin(), r.outcome.sampled.end());
    EXPECT_EQ(distinct.size(), total);
    for (const auto& c : r.outcome.sampled) {
      EXPECT_TRUE(validate_configuration(ex.data.full->space->space(), c).valid());
      EXPECT_EQ(c.at("-N"), OptionValue(std::int64_t{0}));
    }
    EXPECT_EQ(r.calls.designer, r.iterations.size());
    EXPECT_EQ(r.calls.analyzer, r.iterations.size() - 1);
  }
}

TEST(Pipeline, ExhaustedGeneratorsFallBackToRandom) {
  RunningExample ex;
  MockScript script;
  for (const auto& e : ex.script.entries()) {
    if (e.role != RoleTag::generator) script.add(e);
  }
  script.add({RoleTag::generator, std::nullopt, std::nullopt, "I cannot help with that."});
  const MockBackend backend(script);
  const DatasetOracle oracle(ex.data.full);
  LlmSession session(backend);
  const auto r = run_sampling_loop(ex.data.full->space->space(), ex.data.docs, {10, 5, 2}, oracle, ex.data.full->metrics,
                                   session, 1);
  EXPECT_EQ(r.outcome.sampled.size(), 10u);
  for (const auto& it : r.iterations) EXPECT_EQ(it.topped_up, it.batch.size());
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.calls.generator_failed, 4u);
}

TEST(Transcript, ReplayReproducesRun) {
  RunningExample ex;
  const auto path = (std::filesystem::temp_directory_path() / "perfsampler-test-transcript.jsonl").string();
  const MockBackend backend(ex.script);
  const DatasetOracle oracle(ex.data.full);
  TranscriptSink sink(path);
  LlmSession session(backend, {}, &sink);
  const auto a = run_sampling_loop(ex.data.full->space->space(), ex.data.docs, {20, 7, 3}, oracle, ex.data.full->metrics,
                                   session, 1);
  const auto records = read_transcript(path);
  EXPECT_EQ(records.size(), 1 + a.calls.analyzer + a.calls.designer + a.calls.generator);
  for (const auto& r : records) EXPECT_TRUE(r.contains("timestamp"));
  const MockBackend replay(transcript_to_mock(records));
  LlmSession replay_session(replay);
  const auto b = run_sampling_loop(ex.data.full->space->space(), ex.data.docs, {20, 7, 3}, oracle, ex.data.full->metrics,
                                   replay_session, 1);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  std::filesystem::remove(path);
}

TEST(LiveBackend, RetriesTransientStatusesOnly) {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices": [{"message": {"role": "assistant", "content": "hello"}}],
                        "usage": {"prompt_tokens": 3, "completion_tokens": 1}})",
                    "application/json");
  });
  server.Post("/denied", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  ::setenv("PERFSAMPLER_TEST_KEY", "secret", 1);

  auto endpoint = [&](const std::string& path) {
    return LiveEndpoint::from_json(Json{{"base_url", "http://127.0.0.1:" + std::to_string(port)},
                                        {"path", path},
                                        {"api_key_env", "PERFSAMPLER_TEST_KEY"},
                                        {"max_retries", 3},
                                        {"initial_backoff_ms", 1}});
  };
  const auto req = make_request(RoleTag::filter, 0, "hi");
  const LiveBackend flaky(endpoint("/flaky"));
  EXPECT_EQ(flaky.complete(req).text, "hello");
  EXPECT_EQ(flaky.attempts(), 3);
  const LiveBackend denied(endpoint("/denied"));
  EXPECT_EQ(error_code([&] { denied.complete(req); }), Errc::non_retryable_status);
  EXPECT_EQ(denied.attempts(), 1);
  hits = -100;  // keep failing
  const LiveBackend exhausted(endpoint("/flaky"));
  EXPECT_EQ(error_code([&] { exhausted.complete(req); }), Errc::transport_error);
  EXPECT_EQ(exhausted.attempts(), 4);
  ::unsetenv("PERFSAMPLER_TEST_KEY");
  EXPECT_EQ(error_code([&] { flaky.complete(req); }), Errc::invalid_argument);
  server.stop();
  t.join();
}
