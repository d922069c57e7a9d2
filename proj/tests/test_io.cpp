#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ivpotts/io.hpp"

using namespace ivp;

TEST(Io, VolumeForms) {
  EXPECT_EQ(volume_from_json(Json::parse(R"({"type":"window","n":1})")), make_window(1));
  EXPECT_EQ(volume_from_json(Json::parse(R"({"type":"rect","w":3,"h":2,"x0":-1})")),
            make_rect(3, 2).translated(-1, 0));
  const Volume v = make_window(2);
  EXPECT_EQ(volume_from_json(volume_to_json(v)), v);
  const Volume pinched = Volume::from_bonds({Bond::between({0, 0}, {1, 0}), Bond::between({1, 0}, {1, 1})});
  EXPECT_EQ(volume_from_json(Json::parse(volume_to_json(pinched).dump())), pinched);
}

TEST(Io, VolumeErrorsNameTheField) {
  try {
    volume_from_json(Json::parse(R"({"type":"rect","w":3})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "volume.h");
  }
  EXPECT_THROW(volume_from_json(Json::parse(R"({"type":"disc","n":2})")), ConfigError);
  EXPECT_THROW(volume_from_json(Json::parse(R"({"type":"window","n":1,"m":2})")), ConfigError);
  EXPECT_THROW(volume_from_json(Json::parse(R"({"type":"explicit","bonds":[[0,0,"z"]]})")), ConfigError);
}

TEST(Io, ContourRoundtrip) {
  const Configuration x = Configuration::finite(make_rect(3, 2).bonds());
  for (const Contour& c : extract_contours(x)) {
    const Json j = contour_to_json(c);
    EXPECT_EQ(contour_from_json(Json::parse(j.dump())), c);
  }
  const Configuration y = Configuration::cofinite_without(make_rect(2, 2).bonds());
  for (const Contour& c : extract_contours(y)) {
    EXPECT_EQ(c.kind, ContourKind::order);
    EXPECT_EQ(contour_from_json(contour_to_json(c)), c);
  }
  EXPECT_THROW(contour_from_json(Json::parse(R"({"kind":"order","pairs":[[[5,5],[0,0,"x"]]]})")), ConfigError);
}

TEST(Io, ParamsAndCaps) {
  ModelParams p;
  p.q = 3;
  p.r = 7;
  p.beta = 1.25;
  const ModelParams back = params_from_json(params_to_json(p));
  EXPECT_EQ(back.q, 3);
  EXPECT_EQ(back.r, 7);
  EXPECT_EQ(back.beta, 1.25);
  try {
    params_from_json(Json::parse(R"({"q":0})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "params.q");
  }
  EnumerationCaps c;
  c.max_contour_bonds = 8;
  c.flat_cap = 77;
  const EnumerationCaps cb = caps_from_json(caps_to_json(c));
  EXPECT_EQ(cb.max_contour_bonds, 8);
  EXPECT_EQ(cb.flat_cap, 77u);
  EXPECT_THROW(caps_from_json(Json::parse(R"({"max_diameter":-1})")), ConfigError);
}

TEST(Io, GoldenRoundtrip) {
  GoldenValue g;
  g.quantity = "peierls_sum";
  g.value = 0.44210743;
  g.complete = false;
  g.caps.max_diameter = 8;
  const GoldenValue back = golden_from_json(Json::parse(golden_to_json(g).dump()));
  EXPECT_EQ(back.quantity, g.quantity);
  EXPECT_EQ(back.value, g.value);
  EXPECT_FALSE(back.complete);
  EXPECT_EQ(back.caps.max_diameter, 8);
}

TEST(Io, SeriesCsvRoundtrip) {
  ChainConfig cfg;
  cfg.volume = make_rect(3, 3);
  cfg.params.q = 2;
  cfg.params.r = 2;
  cfg.params.beta = 0.7;
  cfg.sweeps = 25;
  cfg.seed = 3;
  const ChainResult res = run_chain(cfg);
  std::stringstream ss;
  write_series_csv(ss, res.series);
  const std::string first = ss.str();
  EXPECT_EQ(first.substr(0, first.find('\n')),
            "sweep,energy_per_site,frac_colour_1,frac_colour_2,frac_colour_3,frac_colour_4,"
            "largest_component_fraction,isolated_fraction");
  const ObservableSeries back = read_series_csv(ss);
  EXPECT_EQ(back.sweep, res.series.sweep);
  EXPECT_EQ(back.energy_per_site, res.series.energy_per_site);
  EXPECT_EQ(back.colour_fractions, res.series.colour_fractions);
  EXPECT_EQ(back.isolated_fraction, res.series.isolated_fraction);
  std::stringstream again;
  write_series_csv(again, back);
  EXPECT_EQ(again.str(), first);
}

TEST(Io, PressureCsvRoundtrip) {
  const PressureTable t = energy_curves(2, 30, {0.5, 1.0, 2.5});
  std::stringstream ss;
  write_pressure_csv(ss, t);
  const PressureTable back = read_pressure_csv(ss);
  ASSERT_EQ(back.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.rows[i].beta, t.rows[i].beta);
    EXPECT_EQ(back.rows[i].F, t.rows[i].F);
    EXPECT_TRUE(std::isnan(back.rows[i].f_rc));
  }
  std::stringstream bad("beta,F\n1,2\n");
  EXPECT_THROW(read_pressure_csv(bad), std::invalid_argument);
}

TEST(Io, Sha256KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
