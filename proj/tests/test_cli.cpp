#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ldlab/config.hpp"
#include "ldlab/csv.hpp"
#include "ldlab/manifest.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace ldlab;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("ldlab_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name, const std::string& body) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << body;
        return p.string();
    }

private:
    fs::path path_;
};

struct Outcome {
    int status = -1;
    std::string out;
};

Outcome run_cli(const std::string& args) {
    const std::string cmd = std::string(LDLAB_CLI_PATH) + " " + args + " 2>/dev/null";
    Outcome o;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return o;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) o.out.append(buf.data(), got);
    const int raw = pclose(p);
    o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string config_error_key(const std::string& path) {
    try {
        load_config(path);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

} // namespace

TEST(Config, EmptyFileGivesDefaults) {
    TempDir d;
    const Config c = load_config(d.file("empty.ini", ""));
    for (const auto& k : config_keys()) EXPECT_EQ(c.text(k.name), k.fallback) << k.name;
    EXPECT_EQ(c.integer("kernel.n"), 3);
    EXPECT_EQ(c.real("kernel.alpha"), 1.0);
}

TEST(Config, FileOverridesDefaults) {
    TempDir d;
    const Config c = load_config(d.file("c.ini", "[kernel]\nalpha = 2.5\n[grid]\nh = 0.05\n"));
    EXPECT_EQ(c.real("kernel.alpha"), 2.5);
    EXPECT_EQ(c.real("grid.h"), 0.05);
    EXPECT_EQ(c.integer("kernel.n"), 3);
}

TEST(Config, AlphaOutsideRangeNamesKey) {
    TempDir d;
    EXPECT_EQ(config_error_key(d.file("c.ini", "[kernel]\nalpha = 3.5\n")), "kernel.alpha");
    EXPECT_EQ(config_error_key(d.file("d.ini", "[kernel]\nalpha = 0\n")), "kernel.alpha");
}

TEST(Config, NonPositiveSpacingNamesKey) {
    TempDir d;
    EXPECT_EQ(config_error_key(d.file("c.ini", "[grid]\nh = 0\n")), "grid.h");
    EXPECT_EQ(config_error_key(d.file("d.ini", "[grid]\nh = -0.1\n")), "grid.h");
}

TEST(Config, UnknownKeyNamesKey) {
    TempDir d;
    EXPECT_EQ(config_error_key(d.file("c.ini", "[grid]\nspacing = 0.1\n")), "grid.spacing");
}

TEST(Config, TypeErrorNamesKey) {
    TempDir d;
    EXPECT_EQ(config_error_key(d.file("c.ini", "[anneal]\nbudget = lots\n")), "anneal.budget");
    EXPECT_EQ(config_error_key(d.file("d.ini", "[anneal]\nseed = -3\n")), "anneal.seed");
    EXPECT_EQ(config_error_key(d.file("e.ini", "[kernel]\nn = 3.5\n")), "kernel.n");
}

TEST(Config, DuplicateKeyRejected) {
    TempDir d;
    EXPECT_NE(config_error_key(d.file("c.ini", "[kernel]\nalpha = 1\nalpha = 2\n")), "<none>");
}

TEST(Config, UnsupportedChoiceNamesKey) {
    TempDir d;
    EXPECT_EQ(config_error_key(d.file("c.ini", "[grid]\nperimeter = magic\n")), "grid.perimeter");
}

TEST(Config, MissingFileIsConfigError) {
    EXPECT_THROW(load_config("/nonexistent/ldlab.ini"), ConfigError);
}

TEST(Csv, FormatsNumbersAndQuotesText) {
    CsvTable t({"id", "count", "value"});
    t.add({std::string("a,b"), 3LL, 0.1});
    t.add({std::string("say \"hi\""), -1LL, 1.0 / 3.0});
    EXPECT_EQ(t.str(), "id,count,value\n\"a,b\",3,0.1\n\"say \"\"hi\"\"\",-1,0.333333333333\n");
    EXPECT_LDLAB_ERROR(t.add({1.0}), ErrorCode::InvalidArgument);
}

TEST(Manifest, DigestsAndVerification) {
    TempDir d;
    const std::string out = d.file("abc.txt", "abc");
    EXPECT_EQ(sha256_file(out), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    RunManifest m("test", "ldlab test", Config{});
    m.set_seed(7);
    m.add_output(out);
    m.result("value", 1.5);
    EXPECT_EQ(m.json().at("seed"), 7);
    EXPECT_EQ(m.json().at("config").at("kernel.alpha"), "1");
    EXPECT_TRUE(RunManifest::verify(m.json()));
    d.file("abc.txt", "abd");
    EXPECT_FALSE(RunManifest::verify(m.json()));
    fs::remove(out);
    EXPECT_FALSE(RunManifest::verify(m.json()));
}

TEST(Process, UnknownFlagExitsTwoAndWritesNothing) {
    TempDir d;
    const Outcome o = run_cli("verify --bogus 1 --out " + (d.path() / "out").string());
    EXPECT_EQ(o.status, 2);
    EXPECT_FALSE(fs::exists(d.path() / "out"));
}

TEST(Process, ConfigErrorExitsTwoAndWritesNothing) {
    TempDir d;
    const Outcome o = run_cli("verify --alpha 3.5 --out " + (d.path() / "out").string());
    EXPECT_EQ(o.status, 2);
    EXPECT_FALSE(fs::exists(d.path() / "out"));
}

TEST(Process, VerifyInterpolationPasses) {
    TempDir d;
    const fs::path out = d.path() / "out";
    const Outcome o = run_cli("verify --check interpolation --samples 4 --out " + out.string());
    EXPECT_EQ(o.status, 0) << o.out;
    EXPECT_NE(o.out.find("PASS"), std::string::npos);
    ASSERT_TRUE(fs::exists(out / "interpolation.csv"));
    const auto doc = nlohmann::json::parse(slurp(out / "verify.manifest.json"));
    EXPECT_EQ(doc.at("verb"), "verify");
    EXPECT_EQ(doc.at("results").at("counterexamples"), 0);
    EXPECT_TRUE(RunManifest::verify(doc));
}

TEST(Process, RerunIsByteIdentical) {
    TempDir d;
    const fs::path a = d.path() / "a", b = d.path() / "b";
    ASSERT_EQ(run_cli("sweep --experiment fission --out " + a.string()).status, 0);
    ASSERT_EQ(run_cli("sweep --experiment fission --out " + b.string()).status, 0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const std::string name = e.path().filename().string();
        if (e.path().extension() != ".csv") continue;
        EXPECT_EQ(slurp(e.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_GT(compared, 0u);
}

TEST(Process, HelpListsEveryKey) {
    const Outcome o = run_cli("--help");
    EXPECT_EQ(o.status, 0);
    for (const auto& k : config_keys()) EXPECT_NE(o.out.find(k.name), std::string::npos) << k.name;
}
