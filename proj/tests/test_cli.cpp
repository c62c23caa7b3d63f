#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "e2e_fixture.hpp"
#include "infosuff/scenario.hpp"
#include "test_support.hpp"

using namespace infosuff;
using testing::TempDir;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& capture_path) {
    std::string cmd = std::string(INFOSUFF_CLI_PATH) + " " + args + " > " + capture_path +
                      " 2>&1";
    int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(capture_path, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    result.output = buf.str();
    return result;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    REQUIRE(f.good());
    f << content;
}

// two-scenario slice of the e2e fixture: 8 trials
ScenarioSet small_corpus() {
    ScenarioSet set = testing::e2e_corpus();
    set.scenarios.resize(2);
    return set;
}

std::string write_config(const TempDir& dir, const std::string& corpus,
                         const std::string& script) {
    std::string path = dir.sub("run.conf");
    write_file(path, "corpus = " + corpus +
                         "\n"
                         "store = " +
                         dir.sub("store") +
                         "\n"
                         "provider = scripted\n"
                         "script = " +
                         script +
                         "\n"
                         "agent_models = agent-1\n"
                         "receiver_model = recv-sim\n"
                         "judge_model = judge-1\n"
                         "concurrency = 2\n"
                         "seed = 7\n");
    return path;
}

}  // namespace

TEST_CASE("cli validate accepts the fixture corpus and runs the filter passes") {
    TempDir dir;
    write_file(dir.sub("corpus.jsonl"), serialize_corpus(small_corpus()));
    auto r = run_cli("validate --corpus " + dir.sub("corpus.jsonl") + " --dedup",
                     dir.sub("out.txt"));
    CHECK_EQ(r.exit_code, 0);
    CHECK_NE(r.output.find("loaded 2 scenarios"), std::string::npos);
    CHECK_NE(r.output.find("keeps 2 scenarios"), std::string::npos);
}

TEST_CASE("cli validate rejects a corpus with duplicate ids, exit 1") {
    TempDir dir;
    std::string line = serialize_scenario(testing::make_scenario("dup"));
    write_file(dir.sub("corpus.jsonl"), line + "\n" + line + "\n");
    auto r = run_cli("validate --corpus " + dir.sub("corpus.jsonl"), dir.sub("out.txt"));
    CHECK_EQ(r.exit_code, 1);
    CHECK_NE(r.output.find("duplicate id"), std::string::npos);
}

TEST_CASE("cli run, resume semantics, report and stats") {
    TempDir dir;
    ScenarioSet corpus = small_corpus();
    write_file(dir.sub("corpus.jsonl"), serialize_corpus(corpus));
    testing::e2e_script().save_json_file(dir.sub("script.json"));
    std::string config = write_config(dir, dir.sub("corpus.jsonl"), dir.sub("script.json"));

    auto run1 = run_cli("run --config " + config, dir.sub("run1.txt"));
    CHECK_EQ(run1.exit_code, 0);
    CHECK_NE(run1.output.find("pending 8, completed 8, failed 0"), std::string::npos);

    // a fresh run on a populated store needs --resume
    auto run2 = run_cli("run --config " + config, dir.sub("run2.txt"));
    CHECK_EQ(run2.exit_code, 1);
    CHECK_NE(run2.output.find("--resume"), std::string::npos);

    auto run3 = run_cli("run --config " + config + " --resume", dir.sub("run3.txt"));
    CHECK_EQ(run3.exit_code, 0);
    CHECK_NE(run3.output.find("pending 0, completed 0, failed 0"), std::string::npos);

    auto report = run_cli("report --store " + dir.sub("store") + " --out " + dir.sub("rep") +
                              " --resamples 200",
                          dir.sub("report.txt"));
    CHECK_EQ(report.exit_code, 0);
    CHECK(std::filesystem::exists(dir.sub("rep") + "/main_results.csv"));
    CHECK(std::filesystem::exists(dir.sub("rep") + "/pareto.json"));

    auto stats = run_cli("stats --store " + dir.sub("store") + " --out " +
                             dir.sub("stats.json"),
                         dir.sub("stats.txt"));
    CHECK_EQ(stats.exit_code, 0);
    CHECK(std::filesystem::exists(dir.sub("stats.json")));
}

TEST_CASE("cli run records a missing-script trial as failed, exit 0 with warning") {
    TempDir dir;
    ScenarioSet corpus = small_corpus();
    write_file(dir.sub("corpus.jsonl"), serialize_corpus(corpus));

    // register only 7 of the 8 trials: s2/pseudonymize never answers
    Script script;
    for (const auto& s : corpus.scenarios)
        for (auto strategy : all_strategies()) {
            if (s.id == "s2" && strategy == StrategyCondition::pseudonymize) continue;
            testing::register_trial(script, testing::e2e_setup(s, strategy),
                                    testing::e2e_trial_script(s, strategy),
                                    testing::kJudgeModel);
        }
    script.save_json_file(dir.sub("script.json"));
    std::string config = write_config(dir, dir.sub("corpus.jsonl"), dir.sub("script.json"));

    auto r = run_cli("run --config " + config, dir.sub("run.txt"));
    CHECK_EQ(r.exit_code, 0);
    CHECK_NE(r.output.find("completed 7, failed 1"), std::string::npos);
    CHECK_NE(r.output.find("warning"), std::string::npos);

    RecordStore store(dir.sub("store"));
    ScanFilter failed;
    failed.status = TrialStatus::failed;
    auto failures = store.scan(failed);
    REQUIRE_EQ(failures.size(), 1);
    CHECK_EQ(failures[0].scenario_snapshot.id, "s2");
    CHECK_EQ(failures[0].failure_stage, "planning");
}

TEST_CASE("cli report on a corrupt store exits 2") {
    TempDir dir;
    ScenarioSet corpus = small_corpus();
    write_file(dir.sub("corpus.jsonl"), serialize_corpus(corpus));
    testing::e2e_script().save_json_file(dir.sub("script.json"));
    std::string config = write_config(dir, dir.sub("corpus.jsonl"), dir.sub("script.json"));
    REQUIRE_EQ(run_cli("run --config " + config, dir.sub("run.txt")).exit_code, 0);

    {
        std::ofstream f(dir.sub("store") + "/records.jsonl",
                        std::ios::binary | std::ios::app);
        f << "corrupted line, not json\n";
    }
    auto r = run_cli("report --store " + dir.sub("store") + " --out " + dir.sub("rep"),
                     dir.sub("report.txt"));
    CHECK_EQ(r.exit_code, 2);
    CHECK_NE(r.output.find("store error"), std::string::npos);
}

TEST_CASE("cli report on an empty store exits 1 with the documented message") {
    TempDir dir;
    std::filesystem::create_directories(dir.sub("store"));
    auto r = run_cli("report --store " + dir.sub("store") + " --out " + dir.sub("rep"),
                     dir.sub("report.txt"));
    CHECK_EQ(r.exit_code, 1);
    CHECK_NE(r.output.find("no complete trials"), std::string::npos);
}

TEST_CASE("cli rejects an unresolvable config, exit 1") {
    TempDir dir;
    write_file(dir.sub("bad.conf"),
               "corpus = missing.jsonl\nstore = s\nagent_models = m\nreceiver_model = r\n"
               "judge_model = j\n");  // http provider but no endpoints
    auto r = run_cli("run --config " + dir.sub("bad.conf"), dir.sub("out.txt"));
    CHECK_EQ(r.exit_code, 1);
    CHECK_NE(r.output.find("no endpoint configured"), std::string::npos);
}
