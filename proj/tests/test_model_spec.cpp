#include "model_spec.hpp"

#include "doctest.h"

using namespace rumboost;

namespace {

ChoiceDataset four_alt_dataset() {
  ChoiceDataset ds;
  ds.alt_names = {"walk", "cycle", "pt", "drive"};
  ds.column_names = {"tt_walk", "tt_cycle", "tt_pt", "tt_drive", "cost_pt", "cost_drive",
                     "age", "license"};
  ds.columns.assign(8, std::vector<double>(6, 0.0));
  for (size_t c = 0; c < 8; ++c)
    for (size_t r = 0; r < 6; ++r) ds.columns[c][r] = static_cast<double>(c + r);
  // license as a 0/1 dummy
  ds.columns[7] = {0, 1, 0, 1, 1, 0};
  ds.choice = {0, 1, 2, 3, 0, 1};
  ds.n_rows = 6;
  return ds;
}

constexpr const char* kFourAltSpec = R"({
  "alternatives": ["walk", "cycle", "pt", "drive"],
  "parameters": [
    {"alt": "walk", "variables": ["tt_walk"], "monotone": ["decreasing"]},
    {"alt": "cycle", "variables": ["tt_cycle"], "monotone": ["decreasing"]},
    {"alt": "pt", "variables": ["tt_pt"], "monotone": ["decreasing"]},
    {"alt": "drive", "variables": ["tt_drive"], "monotone": ["decreasing"]},
    {"alt": "pt", "variables": ["cost_pt"], "monotone": ["decreasing"]},
    {"alt": "drive", "variables": ["cost_drive"], "monotone": ["decreasing"]},
    {"alt": "walk", "variables": ["age"]},
    {"alt": "cycle", "variables": ["age"]},
    {"alt": "pt", "variables": ["age"]},
    {"alt": "drive", "variables": ["age"]}
  ]
})";

}  // namespace

TEST_CASE("parse_spec fills defaults and reads monotone directions") {
  ModelSpec spec = parse_spec(kFourAltSpec);
  CHECK(spec.n_alts() == 4);
  CHECK(spec.reference_alt == 0);
  CHECK(spec.parameters.size() == 10);
  const ParameterSpec& cost = spec.parameters[5];
  CHECK(cost.alt == 3);
  CHECK(cost.variables == std::vector<std::string>{"cost_drive"});
  CHECK(cost.monotone == std::vector<Monotone>{Monotone::Decreasing});
  CHECK(cost.max_depth == 1);
  const ParameterSpec& age = spec.parameters[6];
  CHECK(age.monotone == std::vector<Monotone>{Monotone::None});
  CHECK(!spec.nest.has_value());
  CHECK(spec.fe_blocks.empty());
}

TEST_CASE("parse_spec rejects malformed documents") {
  CHECK_THROWS_AS(parse_spec(R"({"alternatives": ["a","b"], "parameters": []})"), ConfigError);
  CHECK_THROWS_AS(parse_spec(R"({"alternatives": ["a","b"]})"), ConfigError);
  // Unknown key, with a location in the message.
  try {
    parse_spec(R"({"alternatives": ["a","b"],
                   "parameters": [{"alt": "a", "variables": ["x"], "monotne": "none"}]})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("parameters[0]") != std::string::npos);
  }
  // Duplicate (alt, variable set).
  CHECK_THROWS_AS(parse_spec(R"({"alternatives": ["a","b"], "parameters": [
    {"alt": "a", "variables": ["x"]},
    {"alt": "a", "variables": ["x"]}
  ]})"),
                  ConfigError);
  // mu below one.
  CHECK_THROWS_AS(parse_spec(R"({"alternatives": ["a","b"], "parameters": [
    {"alt": "a", "variables": ["x"]}
  ], "nests": [{"alternatives": ["a","b"], "mu": 0.5}]})"),
                  ConfigError);
  // Three-variable interactions are rejected.
  CHECK_THROWS_AS(parse_spec(R"({"alternatives": ["a","b"], "parameters": [
    {"alt": "a", "variables": ["x","y","z"], "max_depth": 3}
  ]})"),
                  ConfigError);
}

TEST_CASE("parse_spec reads nests") {
  ModelSpec spec = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [{"alt": "walk", "variables": ["x"]}],
    "nests": [
      {"alternatives": ["walk"], "mu": 1.0},
      {"alternatives": ["cycle"], "mu": 1.0},
      {"alternatives": ["pt", "drive"], "mu": 1.16}
    ]
  })");
  REQUIRE(spec.nest.has_value());
  CHECK(spec.nest->nests.size() == 3);
  CHECK(spec.nest->mu[2] == doctest::Approx(1.16));
  CHECK(spec.nest->nest_of(3) == 2);
}

TEST_CASE("parse_nest_string builds a partition") {
  NestSpec nest = parse_nest_string("walk;cycle;pt,drive", {"walk", "cycle", "pt", "drive"}, 1.167);
  CHECK(nest.nests.size() == 3);
  CHECK(nest.mu == std::vector<double>{1.0, 1.0, 1.167});
  CHECK_THROWS_AS(parse_nest_string("walk;cycle", {"walk", "cycle", "pt"}, 1.2), ConfigError);
}

TEST_CASE("serialize/parse round-trip is canonical") {
  ModelSpec spec = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "reference_alt": "walk",
    "parameters": [
      {"alt": "drive", "variables": ["cost_drive"], "monotone": ["decreasing"]},
      {"alt": "drive", "variables": ["tt_drive", "age"], "monotone": ["decreasing", "none"],
       "max_depth": 2},
      {"alt": "walk", "variables": ["tt_walk"]}
    ],
    "fe_blocks": [{"alt": "walk", "variables": ["age", "license"], "max_depth": 4,
                   "num_leaves": 74}],
    "nests": [{"alternatives": ["walk", "cycle"], "mu": 1.2},
              {"alternatives": ["pt", "drive"], "mu": 1.5}]
  })");
  ModelSpec again = parse_spec(serialize_spec(spec));
  CHECK(again == spec);
  CHECK(serialize_spec(again) == serialize_spec(spec));
}

TEST_CASE("validate_spec enforces disjoint alternative-specific sets") {
  ChoiceDataset ds = four_alt_dataset();

  ModelSpec good = parse_spec(kFourAltSpec);
  std::vector<std::string> warnings;
  ModelSpec validated = validate_spec(good, ds, &warnings);
  CHECK(validated == good);
  CHECK(warnings.empty());
  // Idempotent.
  CHECK(validate_spec(validated, ds) == good);

  // tt_walk on two of four alternatives: disjointness violation.
  ModelSpec bad = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [
      {"alt": "walk", "variables": ["tt_walk"]},
      {"alt": "cycle", "variables": ["tt_walk"]}
    ]
  })");
  CHECK_THROWS_AS(validate_spec(bad, ds), ConfigError);

  // Missing column.
  ModelSpec missing = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [{"alt": "walk", "variables": ["nope"]}]
  })");
  CHECK_THROWS_AS(validate_spec(missing, ds), ConfigError);
}

TEST_CASE("validate_spec warns on monotone dummies and accepts shared socio-economics") {
  ChoiceDataset ds = four_alt_dataset();
  ModelSpec spec = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [
      {"alt": "walk", "variables": ["age"]},
      {"alt": "cycle", "variables": ["age"]},
      {"alt": "pt", "variables": ["age"]},
      {"alt": "drive", "variables": ["age"]},
      {"alt": "walk", "variables": ["license"], "monotone": ["increasing"]},
      {"alt": "cycle", "variables": ["license"], "monotone": ["increasing"]},
      {"alt": "pt", "variables": ["license"], "monotone": ["increasing"]},
      {"alt": "drive", "variables": ["license"], "monotone": ["increasing"]}
    ]
  })");
  std::vector<std::string> warnings;
  validate_spec(spec, ds, &warnings);
  REQUIRE(warnings.size() == 4);
  CHECK(warnings[0].find("license") != std::string::npos);
}

TEST_CASE("validate_spec keeps fe blocks on the shared set") {
  ChoiceDataset ds = four_alt_dataset();
  // FE blocks over a variable also used as a parameter: rejected by default.
  ModelSpec overlap = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [
      {"alt": "walk", "variables": ["age"]},
      {"alt": "cycle", "variables": ["age"]},
      {"alt": "pt", "variables": ["age"]},
      {"alt": "drive", "variables": ["age"]}
    ],
    "fe_blocks": [
      {"alt": "walk", "variables": ["age"]},
      {"alt": "cycle", "variables": ["age"]},
      {"alt": "pt", "variables": ["age"]},
      {"alt": "drive", "variables": ["age"]}
    ]
  })");
  CHECK_THROWS_AS(validate_spec(overlap, ds), ConfigError);

  ModelSpec opted = overlap;
  opted.allow_fe_overlap = true;
  CHECK_NOTHROW(validate_spec(opted, ds));

  // FE over an alternative-specific variable is rejected.
  ModelSpec fe_alt = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [{"alt": "walk", "variables": ["tt_walk"]}],
    "fe_blocks": [
      {"alt": "walk", "variables": ["cost_pt"]},
      {"alt": "cycle", "variables": ["cost_pt"]},
      {"alt": "pt", "variables": ["cost_pt"]},
      {"alt": "drive", "variables": ["cost_pt"]}
    ]
  })");
  CHECK_NOTHROW(validate_spec(fe_alt, ds));  // cost_pt shared by all four via FE

  ModelSpec fe_partial = parse_spec(R"({
    "alternatives": ["walk", "cycle", "pt", "drive"],
    "parameters": [{"alt": "walk", "variables": ["tt_walk"]}],
    "fe_blocks": [{"alt": "walk", "variables": ["age"]}]
  })");
  CHECK_THROWS_AS(validate_spec(fe_partial, ds), ConfigError);
}
