#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("steam_mapf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(STEAM_MAPF_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                                err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, GenWritesDeterministicFiles) {
    const std::string flags = "--family random --size 16 --density 0.2 --agents 12 --episodes 4 --seed 7 --out ";
    const Result r = run("gen " + flags + (dir_ / "a").string());
    ASSERT_EQ(r.code, 0) << r.err;
    int scenarios = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "a")) scenarios += e.path().extension() == ".json";
    EXPECT_EQ(scenarios, 4);
    ASSERT_EQ(run("gen " + flags + (dir_ / "b").string()).code, 0);
    for (const auto& e : fs::directory_iterator(dir_ / "a")) {
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
    }
    const json doc = json::parse(slurp(dir_ / "a" / "random-16x16-0.json"));
    EXPECT_EQ(doc["agents"].size(), 12u);
    EXPECT_EQ(doc["map_path"], "random-16x16-0.map");
}

TEST_F(Cli, InvalidDensityIsUsageError) {
    const Result r = run("gen --density 1.2 --out " + dir_.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run("bench --agents 9999 --size 8").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, MissingScenarioNamesPath) {
    const std::string missing = (dir_ / "nowhere.json").string();
    const Result r = run("bench --scenario " + missing + " --episodes 2");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsNameTheLine) {
    const fs::path cfg = write("bad.json", "{\n  \"episodes\": 2,\n  \"steam\": {\"alpha\": }\n}\n");
    const Result r = run("bench --config " + cfg.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, BenchCsvShape) {
    const Result r = run("bench --size 10 --agents 6 --episodes 8 --format csv --jobs 2");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line.substr(0, line.find(',')));
    EXPECT_EQ(rows, (std::vector<std::string>{"row", "aggregate", "aggregate", "delta"}));
}

TEST_F(Cli, BenchJsonPairsSeeds) {
    const fs::path out = dir_ / "bench.json";
    ASSERT_EQ(run("bench --size 10 --agents 6 --episodes 5 --seed 40 --out " + out.string()).code, 0);
    const json b = json::parse(slurp(out));
    ASSERT_EQ(b["arms"].size(), 2u);
    EXPECT_EQ(b["arms"][0]["arm"], "baseline");
    EXPECT_EQ(b["arms"][1]["arm"], "steam");
    EXPECT_EQ(b["seeds"], (json{40, 41, 42, 43, 44}));
    for (const auto& arm : b["arms"]) {
        for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(arm["episodes"][k]["seed"], b["seeds"][k]);
    }
    EXPECT_TRUE(b["delta"].is_object());
    EXPECT_EQ(b["arbitration"], "lowest-index");

    const Result report = run("report " + out.string());
    EXPECT_EQ(report.code, 0);
    EXPECT_NE(report.out.find("steam"), std::string::npos);
    EXPECT_NE(report.out.find("baseline"), std::string::npos);
}

TEST_F(Cli, SingleArm) {
    const Result r = run("bench --size 10 --agents 4 --episodes 3 --steam off");
    ASSERT_EQ(r.code, 0) << r.err;
    const json b = json::parse(r.out);
    ASSERT_EQ(b["arms"].size(), 1u);
    EXPECT_EQ(b["arms"][0]["arm"], "baseline");
    EXPECT_TRUE(b["delta"].is_null());
}

TEST_F(Cli, RunTraceGating) {
    write("corridor.map", "type octile\nheight 1\nwidth 5\nmap\n.....\n");
    const fs::path scen =
        write("corridor.json", R"({"map_path": "corridor.map", "agents": [[0,0,0,4],[0,4,0,0]], "seed": 0, "max_steps": 20})");

    const Result traced = run("run --scenario " + scen.string() + " --trace");
    ASSERT_EQ(traced.code, 0) << traced.err;
    const json t = json::parse(traced.out);
    EXPECT_EQ(t["status"], "failure");
    ASSERT_TRUE(t.contains("trajectories"));
    ASSERT_TRUE(t.contains("trace"));
    EXPECT_EQ(t["trace"].size(), 20u);
    EXPECT_NEAR(t["trace"][0]["temporal"][0][4].get<double>(), -4.0, 1e-5);

    const json plain = json::parse(run("run --scenario " + scen.string()).out);
    EXPECT_FALSE(plain.contains("trajectories"));
    EXPECT_FALSE(plain.contains("trace"));
}

TEST_F(Cli, SingleAgentSteamNoop) {
    write("open.map", "type octile\nheight 4\nwidth 4\nmap\n....\n....\n....\n....\n");
    const fs::path scen = write("one.json", R"({"map_path": "open.map", "agents": [[0,0,3,3]], "seed": 0, "max_steps": 20})");
    const Result r = run("run --scenario " + scen.string() + " --steam on");
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["steam_noop"], true);
    EXPECT_EQ(j["success"], true);
    EXPECT_EQ(j["makespan"], 6);
}

TEST_F(Cli, ExternalPolicyFailureExitsThree) {
    const Result r = run("bench --size 8 --agents 3 --episodes 2 --policy-cmd '" + std::string(STUB_POLICY_PATH) +
                         " exit-after 1'");
    EXPECT_EQ(r.code, 3) << r.err;
    const json b = json::parse(r.out);
    EXPECT_EQ(b["arms"][0]["summary"]["infrastructure_failures"], 2);
    EXPECT_EQ(b["arms"][0]["episodes"][0]["status"], "infrastructure_failure");

    const Result ok = run("bench --size 8 --agents 3 --episodes 2 --policy-cmd '" + std::string(STUB_POLICY_PATH) +
                          " follow'");
    EXPECT_EQ(ok.code, 0) << ok.err;
}
