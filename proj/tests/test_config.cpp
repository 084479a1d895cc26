#include <doctest.h>

#include "gfrag/config.hpp"
#include "gfrag/error.hpp"

#include <string>

using namespace gfrag;

namespace {

std::string error_of(const std::string& text) {
    try {
        load_run_config(ConfigFile::parse(text, "cfg"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults describe the reference model") {
    const auto c = load_run_config(ConfigFile::parse(""));
    CHECK(c.family == "triplet");
    CHECK(c.alpha == -0.2);
    CHECK(c.model().omega_minus() == doctest::Approx(0.248444028875810));
    CHECK(c.grids.eps.front() == c.truncation.size_floor);
}

TEST_CASE("sections, lists and generators") {
    const auto c = load_run_config(ConfigFile::parse(R"(
# reference model, singular side
[model]
alpha = -0.5   # trailing comment
[truncation]
size_floor = 1e-6
time_horizon = inf
[run]
seed = 42
threads = 2
root_sizes = 1, 0.5
[grids]
t = lin(0, 1, 3)
eps = log(1e-6, 1, 7)
[profile]
area_mode = freeze
)"));
    CHECK(c.alpha == -0.5);
    CHECK(c.truncation.size_floor == 1e-6);
    CHECK(std::isinf(c.truncation.time_horizon));
    CHECK(c.seed == 42);
    CHECK(c.threads == 2);
    CHECK(c.root_sizes == std::vector<double>{1.0, 0.5});
    CHECK(c.grids.t == std::vector<double>{0.0, 0.5, 1.0});
    REQUIRE(c.grids.eps.size() == 7);
    CHECK(c.grids.eps[3] == doctest::Approx(1e-3));
    CHECK(c.area_mode == AreaMode::Freeze);
}

TEST_CASE("boltzmann family") {
    const auto c = load_run_config(ConfigFile::parse("[model]\nfamily = boltzmann\ntheta = 1.5\n"));
    CHECK(c.alpha == -0.5);
    const auto m = c.model();
    CHECK(m.omega_minus() == doctest::Approx(2.0));
    CHECK(m.omega_plus() == doctest::Approx(3.0));
}

TEST_CASE("errors carry line numbers") {
    CHECK(error_of("[model]\nalpha = abc\n").find("cfg:2") != std::string::npos);
    CHECK(error_of("\n\n[run]\nbogus = 1\n").find("cfg:4") != std::string::npos);
    CHECK(error_of("[run]\nseed = 1\nseed = 2\n").find("cfg:3") != std::string::npos);
    CHECK(error_of("[run\n").find("cfg:1") != std::string::npos);
    CHECK(error_of("novalue\n").find("cfg:1") != std::string::npos);
    CHECK(error_of("[grids]\nt = lin(0, 1)\n").find("cfg:2") != std::string::npos);
    CHECK(error_of("[run]\nthreads = -1\n").find("cfg:2") != std::string::npos);
    CHECK(!error_of("[truncation]\nsize_floor = -1\n").empty());
    CHECK(!error_of("[profile]\narea_mode = sideways\n").empty());
    CHECK(error_of("[run]\nseed = 7\n").empty());
}

TEST_CASE("overrides and echo round trip") {
    auto f = ConfigFile::parse("[run]\nseed = 3\n");
    f.set("run.seed", "99");
    f.set("run.threads", "4");
    const auto c = load_run_config(f);
    CHECK(c.seed == 99);
    CHECK(c.threads == 4);
    const auto again = load_run_config(ConfigFile::parse(c.echo()));
    CHECK(again.echo() == c.echo());
    CHECK(again.grids.r == c.grids.r);
    CHECK(again.truncation.path_step == c.truncation.path_step);
}
