#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "darkwire/config.hpp"
#include "darkwire/csv.hpp"

using namespace darkwire;

TEST(Config, RoundTrip) {
  RunConfig c;
  c.physical.n_sites = 7;
  c.physical.eps_e = 1.0;
  c.physical.gamma_nr = 3e-4;
  c.physical.omega0 = 0.04;
  c.physical.positions = std::vector<std::array<double, 3>>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0},
                                                            {4, 0, 0}, {5, 0, 0}, {6, 0, 1}};
  c.objective = Objective::current;
  c.fast_ec_rate = 0.2;
  const RunConfig d = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(d), to_json(c));
  EXPECT_EQ(d.objective, Objective::current);
  EXPECT_EQ(d.physical.positions->back()[2], 1.0);
  EXPECT_DOUBLE_EQ(*d.physical.omega0, 0.04);
}

TEST(Config, DefaultsFromEmptyObject) {
  const RunConfig c = run_config_from_json(json::object());
  EXPECT_EQ(c.physical.n_sites, 20);
  EXPECT_EQ(c.objective, Objective::power);
  EXPECT_FALSE(c.physical.gamma_alpha_beta.has_value());
}

TEST(Config, UnknownKeyIsAnError) {
  try {
    run_config_from_json(json{{"gama_em", 1e-3}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("gama_em"), std::string::npos);
  }
  EXPECT_THROW(run_config_from_json(json{{"objective", "voltage"}}), Error);
  EXPECT_THROW(run_config_from_json(json::array()), Error);
}

TEST(Config, ExplicitEnergiesSetLength) {
  const RunConfig c = run_config_from_json(json{{"onsite_energies", {1.0, 0.9, 0.7}}});
  EXPECT_EQ(c.physical.n_sites, 3);
}

TEST(Config, LoadValidates) {
  const auto dir = std::filesystem::temp_directory_path() / "darkwire_config_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "bad.json").string();
  std::ofstream(path) << R"({"delta_e": 0.01})";
  try {
    load_config(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("omega0 imaginary"), std::string::npos);
  }
  std::ofstream(path) << R"({"n_sites": 5, "eps_e": 0.9})";
  EXPECT_EQ(load_config(path).physical.n_sites, 5);
  EXPECT_THROW(load_config((dir / "absent.json").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(ModelJson, RoundTrip) {
  PhysicalParams p;
  p.n_sites = 4;
  p.eps_e = 0.85;
  p.gamma_nr = 1e-4;
  p.positions = std::vector<std::array<double, 3>>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 1, 0}};
  const ModelParams m = with_gamma_ab(build_model(p), 4e-5);
  const ModelParams back = model_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(back.processes.size(), m.processes.size());
  EXPECT_FALSE(back.optimize_gamma_ab);
  EXPECT_DOUBLE_EQ(evaluate_power(back).power, evaluate_power(m).power);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 7.0656454e-08, -2.5e300, 5e-324, 0.0}) EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
}

TEST(Csv, QuotesAndArity) {
  const auto path = (std::filesystem::temp_directory_path() / "darkwire_csv_test.csv").string();
  {
    CsvWriter w(path, {"a [1]", "b"});
    w.row({1.5, std::string("x,\"y\"")});
    w.row({static_cast<long long>(3), std::string("z")});
    EXPECT_THROW(w.row({1.0}), Error);
  }
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "a [1],b\n1.5,\"x,\"\"y\"\"\"\n3,z\n");
  std::filesystem::remove(path);
}
