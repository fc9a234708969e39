#include <cmath>
#include <fstream>

#include "clinproj/rng.hpp"
#include "clinproj/vitals.hpp"
#include "doctest.h"

using namespace clinproj;

TEST_CASE("standard registry matches the ranges table") {
    const VitalRegistry& reg = standard_registry();
    CHECK(reg.size() == 30);

    const VitalSpec& hr = reg.lookup("HeartRate");
    CHECK(hr.phys_lo == 30);
    CHECK(hr.phys_hi == 200);
    CHECK(hr.norm_lo == 60);
    CHECK(hr.norm_hi == 90);
    CHECK(!hr.max_hourly_change);
    CHECK(!hr.log_transformed);

    const VitalSpec& temp = reg.lookup("Temp");
    CHECK(temp.phys_lo == 25);
    CHECK(temp.phys_hi == 45);
    CHECK(temp.norm_lo == 36);
    CHECK(temp.norm_hi == 38);
    CHECK(temp.max_hourly_change == 2.0);

    const VitalSpec& lact = reg.lookup("Lactate");
    CHECK(lact.phys_lo == 0);
    CHECK(lact.phys_hi == 30);
    CHECK(lact.norm_lo == 0.5);
    CHECK(lact.norm_hi == 1);
    CHECK(lact.log_transformed);

    std::vector<std::string> logged;
    for (const auto& s : reg.specs())
        if (s.log_transformed) logged.push_back(s.name);
    CHECK(logged == std::vector<std::string>{"Creatinine", "BilirubinDirect", "BilirubinTotal",
                                             "Glucose", "Lactate", "TroponinI", "WBC"});

    int with_rate = 0;
    for (const auto& s : reg.specs())
        if (s.max_hourly_change) ++with_rate;
    CHECK(with_rate == 5);
}

TEST_CASE("normalization worked values") {
    const VitalRegistry& reg = standard_registry();
    const VitalSpec& hr = reg.lookup("HeartRate");
    CHECK(hr.to_solve(54.0) == -0.2);
    CHECK(hr.to_solve(120.0) == 2.0);
    CHECK(hr.to_solve(75.0) == 0.5);

    CHECK(std::abs(reg.lookup("Creatinine").to_solve(14.0) - 5.39) < 0.005);
}

TEST_CASE("transform round trip across the physical range") {
    const VitalRegistry& reg = standard_registry();
    Rng rng(42);
    for (const auto& s : reg.specs()) {
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            double raw = rng.uniform(s.phys_lo, s.phys_hi);
            double back = s.to_raw(s.to_solve(raw));
            worst = std::max(worst, std::abs(back - raw) / std::max(1.0, std::abs(raw)));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("log-scaled vital rejects values at or below -1") {
    const VitalSpec& lact = standard_registry().lookup("Lactate");
    CHECK_THROWS_AS(lact.to_solve(-1.0), std::domain_error);
    CHECK_THROWS_AS(lact.to_solve(-2.5), std::domain_error);
    CHECK_NOTHROW(lact.to_solve(-0.5));
}

TEST_CASE("registry invariants and config error paths") {
    const VitalRegistry& reg = standard_registry();
    for (const auto& s : reg.specs()) {
        CHECK(s.phys_lo < s.phys_hi);
        CHECK(s.norm_lo < s.norm_hi);
        if (s.name != "FiO2" && s.name != "BilirubinTotal") CHECK(s.norm_lo >= s.phys_lo);
        if (s.name != "FiO2") CHECK(s.norm_hi <= s.phys_hi);
        if (s.max_hourly_change) CHECK(*s.max_hourly_change > 0);
    }

    CHECK_THROWS_AS(VitalRegistry::load("/nonexistent/ranges.json"), ConfigError);

    std::string tmp = "/tmp/clinproj_bad_ranges.json";
    {
        std::ofstream out(tmp);
        out << R"({"vitals":[{"name":"HeartRate","phys_lo":30,"phys_hi":200,"norm_lo":60,)"
            << R"("norm_hi":90,"rate":null,"log":false},)"
            << R"({"name":"Broken","phys_lo":10,"phys_hi":5,"norm_lo":1,"norm_hi":2,"rate":null,"log":false}]})";
    }
    CHECK_THROWS_WITH_AS(VitalRegistry::load(tmp), "Broken: physical range is empty", ConfigError);

    {
        std::ofstream out(tmp);
        out << R"({"vitals":[{"name":"NoBounds"}]})";
    }
    try {
        VitalRegistry::load(tmp);
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("NoBounds") != std::string::npos);
    }
}

TEST_CASE("fingerprint is stable and registry-specific") {
    const VitalRegistry& reg = standard_registry();
    CHECK(reg.fingerprint() == standard_registry().fingerprint());
    VitalRegistry sub = reg.subset({"HeartRate", "Temp"});
    CHECK(sub.size() == 2);
    CHECK(sub.fingerprint() != reg.fingerprint());
}
