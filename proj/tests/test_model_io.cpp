#include "doctest.h"

#include "taildep/model_io.hpp"

#include <cmath>
#include <sstream>

using namespace taildep;

namespace {

AnyModel roundtrip(const AnyModel& m) {
    std::stringstream s;
    write_model(s, m);
    return read_model(s);
}

std::string text_of(const AnyModel& m) {
    std::ostringstream s;
    write_model(s, m);
    return s.str();
}

TriangularModel awkward_triangular() {
    auto m = TriangularModel::independent(3);
    m.mu = {0.1, -1.0 / 3.0, 1e-300};
    m.sigma(1, 0) = std::nextafter(0.5, 1.0);
    m.sigma(2, 1) = -0.7;
    m.v(1, 0) = 1.2345678901234567;
    m.u(2, 2) = 63.999999999;
    m.law = LatentLaw::student_t(9.5);
    m.reduced = false;
    return m;
}

}  // namespace

TEST_CASE("triangular model round trips bit for bit") {
    const auto m = awkward_triangular();
    const auto back = std::get<TriangularModel>(roundtrip(m));
    CHECK(back.mu == m.mu);
    CHECK(back.sigma.raw() == m.sigma.raw());
    CHECK(back.u.raw() == m.u.raw());
    CHECK(back.v.raw() == m.v.raw());
    CHECK(back.law == m.law);
    CHECK(back.A == m.A);
    CHECK(text_of(back) == text_of(m));
    CHECK(text_of(m).rfind("taildep-model,1\nkind,triangular\nname,row,col,value\n", 0) == 0);
}

TEST_CASE("one-factor and baseline models round trip") {
    OneFactorModel of;
    of.market = {0.01, 1.3, 1.1, 2.2};
    of.assets = {{0.0, 0.4, 1.0, 1.5, 0.9, 1.0, 1.25}, {-0.02, 0.8, 1.3, 1.0, 0.5, 1.7, 1.0}};
    CHECK(text_of(roundtrip(of)) == text_of(of));
    CHECK(model_dim(of) == 3);

    MvTModel t;
    t.mean = {0.1, 0.2};
    t.scatter = Matrix(2, 2);
    t.scatter(0, 0) = 1.5;
    t.scatter(1, 1) = 0.25;
    t.scatter(0, 1) = t.scatter(1, 0) = 0.1;
    t.df = 4.5;
    MvNormalModel n{t.mean, t.scatter};
    CopulaModel c{CopulaModel::Family::Gumbel, 1.7, {std::vector<double>{-1.0, 0.5, 2.0}, std::vector<double>{0.0, 0.1, 0.3}}};
    OneFactorBaselineModel ob{true, 0.0, 1.0, 5.0, {0.1}, {0.5}, {0.7}, {6.0}};
    for (const AnyModel m : {AnyModel(BaselineModel(t)), AnyModel(BaselineModel(n)), AnyModel(BaselineModel(c)),
                             AnyModel(BaselineModel(ob))}) {
        const auto back = roundtrip(m);
        CHECK(model_kind(back) == model_kind(m));
        CHECK(text_of(back) == text_of(m));
        // Same model, same draws.
        CHECK(make_sampler(back)(1000, 3).raw() == make_sampler(m)(1000, 3).raw());
    }
    CHECK(model_kind(BaselineModel(c)) == "gumbel");
    CHECK(model_kind(BaselineModel(ob)) == "of-t");
}

TEST_CASE("malformed model files are rejected with a location") {
    const std::string good = text_of(awkward_triangular());

    std::istringstream wrong_version("taildep-model,2\nkind,triangular\nname,row,col,value\n");
    CHECK_THROWS_WITH_AS((void)read_model(wrong_version), doctest::Contains("version"), std::invalid_argument);

    std::istringstream not_model("a,b,c\n");
    CHECK_THROWS_AS((void)read_model(not_model), std::invalid_argument);

    // Drop every A row: the error names the field.
    std::string no_a;
    std::istringstream lines(good);
    for (std::string l; std::getline(lines, l);) {
        if (l.rfind("A,", 0) != 0) no_a += l + "\n";
    }
    std::istringstream missing(no_a);
    CHECK_THROWS_WITH_AS((void)read_model(missing), doctest::Contains("'A'"), std::invalid_argument);

    std::istringstream junk(good + "mu,0,0,abc\n");
    CHECK_THROWS_WITH_AS((void)read_model(junk), doctest::Contains("line"), std::invalid_argument);

    std::istringstream unknown("taildep-model,1\nkind,vine\nname,row,col,value\n");
    CHECK_THROWS_WITH_AS((void)read_model(unknown), doctest::Contains("vine"), std::invalid_argument);

    // Parameters that fail validation are rejected on load.
    std::string bad = good;
    bad.replace(bad.find("\nu,2,2,"), 7, "\nu,2,2,9");
    std::istringstream invalid(bad);
    CHECK_THROWS_AS((void)read_model(invalid), std::invalid_argument);
}
