#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "tvcsl/io.hpp"
#include "tvcsl/types.hpp"

using namespace tvcsl;

namespace {

SubjectRecord subject(std::int64_t id, double a, double u, bool event) {
    SubjectRecord s;
    s.id = id;
    s.x = {0.1 * static_cast<double>(id), -1.0, 2.0};
    s.adoption_time = a;
    s.observed_time = u;
    s.event = event;
    return s;
}

Dataset three_subject_data() {
    Dataset d;
    d.p = 3;
    d.column_names = {"x1", "x2", "x3"};
    d.subjects = {subject(1, 2.0, 5.0, true),     // adopts mid-follow-up
                  subject(2, kInfTime, 4.0, true),  // never adopts
                  subject(3, 7.0, 3.0, false)};   // adoption beyond follow-up
    return d;
}

}  // namespace

TEST_CASE("episode expansion splits at adoption") {
    const auto rows = expand_to_episodes(subject(9, 2.0, 5.0, true));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].start == 0.0);
    CHECK(rows[0].stop == 2.0);
    CHECK_FALSE(rows[0].treated);
    CHECK_FALSE(rows[0].event);  // the event belongs to the final episode
    CHECK(rows[1].start == 2.0);
    CHECK(rows[1].stop == 5.0);
    CHECK(rows[1].treated);
    CHECK(rows[1].event);
}

TEST_CASE("adoption at time zero means treated from the start") {
    const auto rows = expand_to_episodes(subject(9, 0.0, 5.0, true));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].treated);
    CHECK(rows[0].start == 0.0);
    CHECK(rows[0].stop == 5.0);
}

TEST_CASE("adoption at or beyond follow-up yields one untreated episode") {
    for (double a : {5.0, 6.5, kInfTime}) {
        const auto rows = expand_to_episodes(subject(9, a, 5.0, true));
        REQUIRE(rows.size() == 1);
        CHECK_FALSE(rows[0].treated);
        CHECK(rows[0].event);
    }
}

TEST_CASE("risk set uses start < t <= stop") {
    const auto rows = expand_to_episodes(three_subject_data());
    // Subject 1 contributes (0,2] untreated and (2,5] treated.
    auto at = [&](double t) { return risk_set(rows, t); };
    CHECK(at(2.0).size() == 3);   // all first episodes contain t = 2
    CHECK(at(2.5).size() == 3);   // subject 1 switched to its treated episode
    CHECK(at(3.0).size() == 3);
    CHECK(at(3.5).size() == 2);   // subject 3 censored at 3
    CHECK(at(4.5).size() == 1);   // only subject 1 remains
    CHECK(at(4.5)[0] == 1);
    CHECK(at(5.5).empty());
    // At t = 0 nothing is at risk yet: every episode starts at 0 exclusive.
    CHECK(at(0.0).empty());
    // The switch episode boundary: exactly one episode of subject 1 covers
    // each of t = 2 (the untreated one) and t = 2 + eps (the treated one).
    int covering_2 = 0, covering_2eps = 0;
    for (const auto& r : rows) {
        if (r.subject_id != 1) continue;
        if (r.start < 2.0 && 2.0 <= r.stop) {
            ++covering_2;
            CHECK_FALSE(r.treated);
        }
        if (r.start < 2.000001 && 2.000001 <= r.stop) {
            ++covering_2eps;
            CHECK(r.treated);
        }
    }
    CHECK(covering_2 == 1);
    CHECK(covering_2eps == 1);
}

TEST_CASE("validate rejects malformed datasets") {
    Dataset d = three_subject_data();
    SUBCASE("duplicate id") {
        d.subjects.push_back(subject(1, kInfTime, 2.0, false));
        CHECK_THROWS_AS(validate(d), std::invalid_argument);
    }
    SUBCASE("non-positive observed time") {
        d.subjects[0].observed_time = 0.0;
        CHECK_THROWS_AS(validate(d), std::invalid_argument);
    }
    SUBCASE("negative adoption time") {
        d.subjects[0].adoption_time = -1.0;
        CHECK_THROWS_AS(validate(d), std::invalid_argument);
    }
    SUBCASE("covariate dimension mismatch") {
        d.subjects[1].x.pop_back();
        CHECK_THROWS_AS(validate(d), std::invalid_argument);
    }
    SUBCASE("column name count mismatch") {
        d.column_names.pop_back();
        CHECK_THROWS_AS(validate(d), std::invalid_argument);
    }
}

TEST_CASE("dataset csv round trip preserves infinities and precision") {
    Dataset d = three_subject_data();
    d.subjects[0].x[0] = 0.1 + 0.2;  // exercise full precision
    const std::string path = "test_episodes_roundtrip.csv";
    write_dataset_csv(d, path);
    const Dataset back = read_dataset_csv(path);
    REQUIRE(back.subjects.size() == d.subjects.size());
    CHECK(back.column_names == d.column_names);
    for (std::size_t i = 0; i < d.subjects.size(); ++i) {
        CHECK(back.subjects[i].id == d.subjects[i].id);
        CHECK(back.subjects[i].x == d.subjects[i].x);
        CHECK(back.subjects[i].adoption_time == d.subjects[i].adoption_time);
        CHECK(back.subjects[i].observed_time == d.subjects[i].observed_time);
        CHECK(back.subjects[i].event == d.subjects[i].event);
    }
    std::remove(path.c_str());
}

TEST_CASE("dataset csv reader reports the offending line") {
    const std::string path = "test_episodes_bad.csv";
    {
        std::ofstream out(path);
        out << "id,x1,x2,x3,adoption_time,observed_time,event\n";
        out << "1,0.1,0.2,0.3,inf,4.0,1\n";
        out << "2,0.1,0.2,0.3,inf,4.0,7\n";  // bad event flag
    }
    try {
        read_dataset_csv(path);
        FAIL("expected a parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::remove(path.c_str());
}
