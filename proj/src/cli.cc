//
// Copyright 2026 The Fairproxy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fairproxy/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fairproxy/bisg.h"
#include "fairproxy/cbisg.h"
#include "fairproxy/csv.h"
#include "fairproxy/diagnostics.h"
#include "fairproxy/estimators.h"
#include "fairproxy/micsg.h"
#include "fairproxy/simulator.h"
#include "fairproxy/tables.h"

namespace fairproxy::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json Number(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string Hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << value;
  std::string text = out.str();
  return std::string(16 - std::min<std::size_t>(16, text.size()), '0') + text;
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void WriteJson(const std::string& path, const json& doc) {
  csv::WriteFile(path, doc.dump(2) + "\n");
}

std::string Absolute(const std::string& path) {
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

// Inputs, outputs and settings of one run.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::optional<std::uint64_t> seed;
  std::string seed_source;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json settings = json::object();
};

void WriteManifest(const Manifest& manifest, const std::string& path) {
  json inputs = json::array();
  for (const auto& input : manifest.inputs) {
    const std::string bytes = ReadText(input);
    inputs.push_back({{"path", input},
                      {"bytes", bytes.size()},
                      {"fnv1a64", Hex(Fnv1a(bytes))}});
  }
  json doc = {
      {"schema", 1},
      {"kind", "manifest"},
      {"subcommand", manifest.subcommand},
      {"args", manifest.args},
      {"seed", manifest.seed ? json(*manifest.seed) : json(nullptr)},
      {"seed_source", manifest.seed_source},
      {"versions", {{"fairproxy", kVersion}, {"schema", 1}}},
      {"inputs", inputs},
      {"outputs", manifest.outputs},
      {"settings", manifest.settings},
      {"created_at", UtcTimestamp()},
  };
  WriteJson(path, doc);
}

std::string ManifestPath(const std::string& output) {
  return output + ".manifest.json";
}

std::uint64_t ParseSeed(const std::string& text, const std::string& what) {
  if (text.empty() || text.size() > 20 ||
      !std::all_of(text.begin(), text.end(),
                   [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::kInvalidArgument,
                what + " must be an unsigned 64-bit integer, got '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, what + " is out of range");
  }
}

// --seed wins over the environment. Records where the seed came from.
std::optional<std::uint64_t> ResolveSeed(const std::string& flag,
                                         Manifest* manifest) {
  if (!flag.empty()) {
    manifest->seed = ParseSeed(flag, "--seed");
    manifest->seed_source = "flag";
  } else if (const char* env = std::getenv(kSeedEnv); env != nullptr) {
    manifest->seed = ParseSeed(env, kSeedEnv);
    manifest->seed_source = "env";
  } else {
    manifest->seed_source = "none";
  }
  return manifest->seed;
}

std::uint64_t RequireSeed(const std::string& flag, Manifest* manifest,
                          const std::string& why) {
  const auto seed = ResolveSeed(flag, manifest);
  if (!seed) {
    throw Error(ErrorCode::kInvalidArgument,
                why + " needs a seed: pass --seed or set " + kSeedEnv);
  }
  return *seed;
}

// Splits "kind[:path][;key=value...]".
struct SpecParts {
  std::string kind;
  std::string path;
  std::map<std::string, std::string> options;
};

SpecParts SplitSpec(const std::string& spec) {
  SpecParts parts;
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (true) {
    const auto semi = spec.find(';', start);
    pieces.push_back(spec.substr(start, semi - start));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  const auto colon = pieces[0].find(':');
  parts.kind = pieces[0].substr(0, colon);
  if (colon != std::string::npos) parts.path = pieces[0].substr(colon + 1);
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const auto eq = pieces[i].find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "malformed proxy spec option '" + pieces[i] + "'");
    }
    parts.options[pieces[i].substr(0, eq)] = pieces[i].substr(eq + 1);
  }
  return parts;
}

struct ResolvedProxy {
  std::shared_ptr<const ContextualProxy> proxy;
  std::shared_ptr<const MicsgModel> micsg;  // set for micsg proxies
  RaceSet races{"a", "b"};
  // Self-contained description with absolute paths.
  std::string canonical;
  std::string kind;
  std::vector<std::string> inputs;
};

std::string Option(const SpecParts& parts, const std::string& key) {
  auto it = parts.options.find(key);
  if (it == parts.options.end() || it->second.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "proxy '" + parts.kind + "' needs " + key);
  }
  return it->second;
}

ResolvedProxy ResolveCanonical(const std::string& canonical) {
  const SpecParts parts = SplitSpec(canonical);
  ResolvedProxy resolved;
  resolved.canonical = canonical;
  resolved.kind = parts.kind;
  if (parts.kind == "bisg") {
    const std::string surnames_path = Option(parts, "surnames");
    const std::string geo_path = Option(parts, "geo");
    resolved.races = RaceSetFromHeader(surnames_path);
    resolved.proxy = std::make_shared<BisgModel>(
        LoadSurnameTable(surnames_path, resolved.races),
        LoadGeoTable(geo_path, resolved.races));
    resolved.inputs = {surnames_path, geo_path};
  } else if (parts.kind == "cbisg") {
    const std::string surnames_path = Option(parts, "surnames");
    if (parts.path.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "cbisg proxy needs a model path");
    }
    resolved.races = RaceSetFromHeader(surnames_path);
    PointEstimate mode = PointEstimate::kPosteriorMean;
    std::uint64_t seed = 0;
    if (auto it = parts.options.find("point"); it != parts.options.end()) {
      if (it->second == "sample") {
        mode = PointEstimate::kPosteriorSample;
      } else if (it->second != "mean") {
        throw Error(ErrorCode::kInvalidArgument, "point must be mean|sample");
      }
    }
    if (auto it = parts.options.find("seed"); it != parts.options.end()) {
      seed = ParseSeed(it->second, "cbisg seed");
    }
    resolved.proxy = std::make_shared<CbisgModel>(LoadCbisg(
        parts.path, LoadSurnameTable(surnames_path, resolved.races), mode,
        seed));
    resolved.inputs = {parts.path, surnames_path};
  } else if (parts.kind == "oracle") {
    if (parts.path.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "oracle proxy needs a table path");
    }
    auto table = std::make_shared<const JointTable>(LoadJointTable(parts.path));
    resolved.races = table->races();
    resolved.proxy = std::make_shared<OracleContextualProxy>(table);
    resolved.inputs = {parts.path};
  } else if (parts.kind == "micsg") {
    if (parts.path.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "micsg proxy needs a model path");
    }
    std::vector<std::string> base_inputs;
    auto model = std::make_shared<const MicsgModel>(ParseMicsg(
        ReadText(parts.path), [&](const std::string& base_spec) {
          if (SplitSpec(base_spec).kind == "micsg") {
            throw Error(ErrorCode::kInvalidArgument,
                        "a MICSG base cannot itself be MICSG");
          }
          ResolvedProxy base = ResolveCanonical(base_spec);
          base_inputs = base.inputs;
          return base.proxy;
        }));
    resolved.races = model->races();
    resolved.micsg = model;
    resolved.proxy = model;
    resolved.inputs = {parts.path};
    resolved.inputs.insert(resolved.inputs.end(), base_inputs.begin(),
                           base_inputs.end());
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown proxy kind '" + parts.kind +
                    "' (expected bisg, cbisg:<path>, micsg:<path>, "
                    "oracle:<path>)");
  }
  return resolved;
}

struct TableFlags {
  std::string surnames;
  std::string geo;
  std::string point = "mean";
};

// Turns a user-facing spec plus table flags into a canonical spec.
std::string Canonicalize(const std::string& spec, const TableFlags& tables,
                         const std::optional<std::uint64_t>& seed) {
  const SpecParts parts = SplitSpec(spec);
  if (!parts.options.empty()) return spec;  // already canonical
  auto require = [&](const std::string& value, const char* flag) {
    if (value.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "proxy '" + parts.kind + "' needs " + flag);
    }
    return Absolute(value);
  };
  if (parts.kind == "bisg") {
    return "bisg;surnames=" + require(tables.surnames, "--surnames") +
           ";geo=" + require(tables.geo, "--geo");
  }
  if (parts.kind == "cbisg") {
    std::string out = "cbisg:" + require(parts.path, "a model path") +
                      ";surnames=" + require(tables.surnames, "--surnames");
    if (tables.point == "sample") {
      if (!seed) {
        throw Error(ErrorCode::kInvalidArgument,
                    "--point sample needs a seed: pass --seed or set " +
                        std::string(kSeedEnv));
      }
      out += ";point=sample;seed=" + std::to_string(*seed);
    } else if (tables.point != "mean") {
      throw Error(ErrorCode::kInvalidArgument, "--point must be mean|sample");
    }
    return out;
  }
  if (parts.kind == "micsg" || parts.kind == "oracle") {
    return parts.kind + ":" + require(parts.path, "a path");
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown proxy kind '" + parts.kind + "'");
}

RaceSet ParseRaceList(const std::string& text) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    labels.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return RaceSet(labels);
}

SupplementalDataset ApplySplit(SupplementalDataset dataset, double fraction,
                               std::optional<std::uint64_t> seed,
                               bool train_part) {
  if (fraction < 0.0) return dataset;  // no split requested
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "--split must lie in (0, 1)");
  }
  if (!seed) {
    throw Error(ErrorCode::kInvalidArgument,
                "--split needs a seed: pass --seed or set " +
                    std::string(kSeedEnv));
  }
  auto parts = SplitByIdHash(dataset, fraction, *seed);
  return train_part ? std::move(parts.first) : std::move(parts.second);
}

json SplitJson(double fraction) {
  return fraction < 0.0 ? json(nullptr) : json(fraction);
}

json PredictionSourceJson(PredictionSource source) {
  switch (source) {
    case PredictionSource::kSurnameAndPrior:
      return "surname_and_prior";
    case PredictionSource::kMissingSurname:
      return "missing_surname";
    case PredictionSource::kZeroProduct:
      return "zero_product";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Subcommands.

struct SimulateFlags {
  std::string config;
  std::size_t n = 100000;
  std::string seed;
  std::string out_dir;
};

RandomDgpOptions ParseDgpOptions(const json& doc, double* population,
                                 bool* round_counts) {
  RandomDgpOptions options;
  for (const auto& [key, value] : doc.items()) {
    if (key == "num_races") {
      options.num_races = value.get<std::size_t>();
    } else if (key == "num_geos") {
      options.num_geos = value.get<std::size_t>();
    } else if (key == "num_surnames") {
      options.num_surnames = value.get<std::size_t>();
    } else if (key == "theta") {
      options.theta = value.get<std::vector<double>>();
    } else if (key == "geo_concentration") {
      options.geo_concentration = value.get<double>();
    } else if (key == "surname_concentration") {
      options.surname_concentration = value.get<double>();
    } else if (key == "assumption1_violation") {
      options.assumption1_violation = value.get<double>();
    } else if (key == "base_rate_low") {
      options.base_rate_low = value.get<double>();
    } else if (key == "base_rate_high") {
      options.base_rate_high = value.get<double>();
    } else if (key == "race_shift") {
      options.race_shift = value.get<std::vector<double>>();
    } else if (key == "race_effect") {
      options.race_effect = value.get<double>();
    } else if (key == "num_covariates") {
      options.num_covariates = value.get<std::size_t>();
    } else if (key == "covariate_noise") {
      options.covariate_noise = value.get<double>();
    } else if (key == "census_population") {
      *population = value.get<double>();
    } else if (key == "round_counts") {
      *round_counts = value.get<bool>();
    } else if (key != "schema") {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
  }
  return options;
}

json DgpOptionsJson(const RandomDgpOptions& o, double population,
                    bool round_counts) {
  return {{"num_races", o.num_races},
          {"num_geos", o.num_geos},
          {"num_surnames", o.num_surnames},
          {"theta", o.theta},
          {"geo_concentration", o.geo_concentration},
          {"surname_concentration", o.surname_concentration},
          {"assumption1_violation", o.assumption1_violation},
          {"base_rate_low", o.base_rate_low},
          {"base_rate_high", o.base_rate_high},
          {"race_shift", o.race_shift},
          {"race_effect", o.race_effect},
          {"num_covariates", o.num_covariates},
          {"covariate_noise", o.covariate_noise},
          {"census_population", population},
          {"round_counts", round_counts}};
}

void RunSimulate(const SimulateFlags& flags, Manifest& manifest) {
  const std::uint64_t seed = RequireSeed(flags.seed, &manifest, "simulate");
  double population = 1e6;
  bool round_counts = false;
  RandomDgpOptions options;
  if (!flags.config.empty()) {
    json doc;
    try {
      doc = json::parse(ReadText(flags.config));
      options = ParseDgpOptions(doc, &population, &round_counts);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("config: ") + e.what());
    }
    manifest.inputs.push_back(flags.config);
  }
  if (flags.n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "--n must be >= 1");
  }
  const JointTable table = BuildJoint(RandomDgp(options, seed));
  const SupplementalDataset sample =
      SamplePopulation(table, flags.n, HashId("population", seed));
  const CensusTables census =
      ExactCensusTables(table, population, round_counts);
  std::error_code ec;
  fs::create_directories(flags.out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create '" + flags.out_dir + "': " + ec.message());
  }
  const fs::path dir(flags.out_dir);
  const std::string surnames = (dir / "surnames.csv").string();
  const std::string geo = (dir / "geo.csv").string();
  const std::string supplemental = (dir / "supplemental.csv").string();
  const std::string joint = (dir / "joint_table.csv").string();
  csv::WriteFile(surnames, SerializeSurnameTable(census.surnames));
  csv::WriteFile(geo, SerializeGeoTable(census.geos));
  csv::WriteFile(supplemental, SerializeSupplemental(sample, table.races()));
  csv::WriteFile(joint, SerializeJointTable(table));
  manifest.outputs = {surnames, geo, supplemental, joint};
  manifest.settings = {{"n", flags.n},
                       {"dgp", DgpOptionsJson(options, population, round_counts)}};
  WriteManifest(manifest, (dir / "manifest.json").string());
}

struct IngestFlags {
  TableFlags tables;
  std::string supplemental;
  std::string export_dir;
  std::string out;
};

void RunIngestCheck(const IngestFlags& flags, Manifest& manifest) {
  const RaceSet races = RaceSetFromHeader(flags.tables.surnames);
  const SurnameTable surnames = LoadSurnameTable(flags.tables.surnames, races);
  const GeoTable geos = LoadGeoTable(flags.tables.geo, races);
  manifest.inputs = {flags.tables.surnames, flags.tables.geo};
  const bool has_residual =
      std::any_of(surnames.residual().begin(), surnames.residual().end(),
                  [](double c) { return c > 0.0; });
  json doc = {{"schema", 1},
              {"kind", "ingest"},
              {"races", races.labels()},
              {"surnames", {{"count", surnames.size()},
                            {"residual_row", has_residual},
                            {"race_totals", surnames.race_totals()}}},
              {"geos", {{"count", geos.size()}}}};
  if (!flags.supplemental.empty()) {
    const SupplementalDataset data = LoadSupplemental(flags.supplemental, races);
    manifest.inputs.push_back(flags.supplemental);
    std::size_t positive = 0;
    std::size_t unknown_geo = 0;
    std::size_t missing_surname = 0;
    for (const auto& record : data.records) {
      positive += record.context == 1;
      unknown_geo += !geos.Contains(record.geo);
      missing_surname += !surnames.Contains(record.surname);
    }
    doc["supplemental"] = {{"n", data.size()},
                           {"labeled", data.labeled()},
                           {"n_positive", positive},
                           {"covariates", data.covariates.ExpandedNames()},
                           {"unknown_geo_records", unknown_geo},
                           {"missing_surname_records", missing_surname}};
  }
  WriteJson(flags.out, doc);
  manifest.outputs = {flags.out};
  if (!flags.export_dir.empty()) {
    std::error_code ec;
    fs::create_directories(flags.export_dir, ec);
    if (ec) {
      throw Error(ErrorCode::kIo,
                  "cannot create '" + flags.export_dir + "': " + ec.message());
    }
    const fs::path dir(flags.export_dir);
    const std::string surname_probs =
        (dir / "surname_given_race.csv").string();
    const std::string geo_probs = (dir / "race_given_geo.csv").string();
    csv::WriteFile(surname_probs, ExportSurnameProbabilities(surnames));
    csv::WriteFile(geo_probs, ExportGeoProbabilities(geos));
    manifest.outputs.push_back(surname_probs);
    manifest.outputs.push_back(geo_probs);
  }
  WriteManifest(manifest, ManifestPath(flags.out));
}

struct PredictBisgFlags {
  TableFlags tables;
  std::string input;
  std::string out;
};

void RunPredictBisg(const PredictBisgFlags& flags, Manifest& manifest) {
  const RaceSet races = RaceSetFromHeader(flags.tables.surnames);
  const BisgModel model(LoadSurnameTable(flags.tables.surnames, races),
                        LoadGeoTable(flags.tables.geo, races));
  const SupplementalDataset data = LoadSupplemental(flags.input, races);
  manifest.inputs = {flags.tables.surnames, flags.tables.geo, flags.input};
  std::vector<std::string> header = {"id"};
  header.insert(header.end(), races.labels().begin(), races.labels().end());
  header.push_back("source");
  std::string out = csv::JoinRow(header) + "\n";
  for (const auto& record : data.records) {
    const DetailedPrediction prediction =
        model.PredictDetailed(record.surname, record.geo);
    std::vector<std::string> row = {record.id};
    for (double p : prediction.distribution.probs()) {
      row.push_back(csv::FormatDouble(p, 17));
    }
    row.push_back(PredictionSourceJson(prediction.source).get<std::string>());
    out += csv::JoinRow(row) + "\n";
  }
  csv::WriteFile(flags.out, out);
  manifest.outputs = {flags.out};
  WriteManifest(manifest, ManifestPath(flags.out));
}

struct FitCbisgFlags {
  TableFlags tables;
  std::string train;
  std::string eta = "tune";
  std::string eta_grid = "0:1:0.1";
  std::string tune_estimator = "bayes";
  std::string averaging = "observed";
  double default_eta = 0.0;
  double split = -1.0;
  std::string seed;
  std::string model_out;
};

void RunFitCbisg(const FitCbisgFlags& flags, Manifest& manifest) {
  const auto seed = ResolveSeed(flags.seed, &manifest);
  const RaceSet races = RaceSetFromHeader(flags.tables.surnames);
  const SurnameTable surnames = LoadSurnameTable(flags.tables.surnames, races);
  const GeoTable geos = LoadGeoTable(flags.tables.geo, races);
  const SupplementalDataset train = ApplySplit(
      LoadSupplemental(flags.train, races), flags.split, seed, true);
  manifest.inputs = {flags.tables.surnames, flags.tables.geo, flags.train};
  CbisgFitConfig config;
  if (flags.eta == "tune") {
    config.eta = std::nullopt;
  } else {
    double eta = 0.0;
    if (!csv::ParseDouble(flags.eta, &eta)) {
      throw Error(ErrorCode::kInvalidArgument, "--eta must be a number or 'tune'");
    }
    config.eta = eta;
  }
  config.tuning.candidates = ParseEtaGrid(flags.eta_grid);
  config.tuning.estimator = ParseEstimatorKind(flags.tune_estimator);
  config.tuning.averaging = ParseContextAveraging(flags.averaging);
  config.tuning.default_eta = flags.default_eta;
  const CbisgModel model = FitCbisg(geos, surnames, train, config);
  csv::WriteFile(flags.model_out, SerializeCbisg(model));
  manifest.outputs = {flags.model_out};
  manifest.settings = {{"eta", flags.eta},
                       {"eta_grid", config.tuning.candidates},
                       {"tune_estimator", flags.tune_estimator},
                       {"averaging", flags.averaging},
                       {"default_eta", flags.default_eta},
                       {"split", SplitJson(flags.split)},
                       {"train_records", train.size()},
                       {"geos", model.etas().size()}};
  WriteManifest(manifest, ManifestPath(flags.model_out));
}

struct FitMicsgFlags {
  std::string base;
  TableFlags tables;
  std::string train;
  double lambda = 1e-4;
  double tolerance = 1e-6;
  int max_iters = 5000;
  std::string encoding = "log-probability";
  double split = -1.0;
  std::string seed;
  std::string model_out;
};

void RunFitMicsg(const FitMicsgFlags& flags, Manifest& manifest) {
  const std::uint64_t seed = RequireSeed(flags.seed, &manifest, "fit-micsg");
  if (SplitSpec(flags.base).kind == "micsg") {
    throw Error(ErrorCode::kInvalidArgument, "MICSG base cannot be MICSG");
  }
  const ResolvedProxy base =
      ResolveCanonical(Canonicalize(flags.base, flags.tables, seed));
  const SupplementalDataset train = ApplySplit(
      LoadSupplemental(flags.train, base.races), flags.split, seed, true);
  manifest.inputs = base.inputs;
  manifest.inputs.push_back(flags.train);
  MicsgConfig config;
  config.learner.l2_lambda = flags.lambda;
  config.learner.tolerance = flags.tolerance;
  config.learner.max_iters = flags.max_iters;
  config.learner.seed = seed;
  config.encoding = ParseBaseEncoding(flags.encoding);
  const MicsgModel model =
      FitMicsg(base.proxy, base.canonical, base.races, train, config);
  csv::WriteFile(flags.model_out, SerializeMicsg(model));
  const auto& fit = model.learner().diagnostics();
  manifest.outputs = {flags.model_out};
  manifest.settings = {{"base", base.canonical},
                       {"lambda", flags.lambda},
                       {"tolerance", flags.tolerance},
                       {"max_iters", flags.max_iters},
                       {"encoding", flags.encoding},
                       {"split", SplitJson(flags.split)},
                       {"train_records", train.size()},
                       {"fit_status", FitStatusName(fit.status)},
                       {"iterations", fit.iterations}};
  WriteManifest(manifest, ManifestPath(flags.model_out));
}

struct PredictMicsgFlags {
  std::string model;
  std::string input;
  std::string context = "observed";
  std::string out;
};

void RunPredictMicsg(const PredictMicsgFlags& flags, Manifest& manifest) {
  const ResolvedProxy resolved =
      ResolveCanonical("micsg:" + Absolute(flags.model));
  std::optional<int> context;
  if (flags.context == "0" || flags.context == "1") {
    context = flags.context == "1" ? 1 : 0;
  } else if (flags.context != "observed") {
    throw Error(ErrorCode::kInvalidArgument,
                "--context must be 0, 1 or observed");
  }
  const SupplementalDataset data = LoadSupplemental(
      flags.input, resolved.races, &resolved.micsg->layout());
  manifest.inputs = resolved.inputs;
  manifest.inputs.push_back(flags.input);
  std::vector<std::string> header = {"id"};
  header.insert(header.end(), resolved.races.labels().begin(),
                resolved.races.labels().end());
  std::string out = csv::JoinRow(header) + "\n";
  for (const auto& record : data.records) {
    const RaceDistribution prediction = resolved.micsg->Evaluate(
        record, context.value_or(record.context));
    std::vector<std::string> row = {record.id};
    for (double p : prediction.probs()) row.push_back(csv::FormatDouble(p, 17));
    out += csv::JoinRow(row) + "\n";
  }
  csv::WriteFile(flags.out, out);
  manifest.outputs = {flags.out};
  manifest.settings = {{"context", flags.context}};
  WriteManifest(manifest, ManifestPath(flags.out));
}

struct EvaluateFlags {
  std::string proxy;
  TableFlags tables;
  std::string input;
  std::string out;
  std::string averaging = "observed";
  double split = -1.0;
  std::string seed;
};

// Loads the evaluation data for a proxy; a null proxy needs race labels
// from --races or --surnames.
struct EvaluationInput {
  std::optional<ResolvedProxy> proxy;
  RaceSet races{"a", "b"};
  SupplementalDataset data;
};

EvaluationInput LoadEvaluation(const EvaluateFlags& flags,
                               const std::string& races_flag,
                               Manifest& manifest) {
  const auto seed = ResolveSeed(flags.seed, &manifest);
  EvaluationInput input;
  if (!flags.proxy.empty()) {
    input.proxy = ResolveCanonical(Canonicalize(flags.proxy, flags.tables, seed));
    input.races = input.proxy->races;
    manifest.inputs = input.proxy->inputs;
  } else if (!races_flag.empty()) {
    input.races = ParseRaceList(races_flag);
  } else if (!flags.tables.surnames.empty()) {
    input.races = RaceSetFromHeader(flags.tables.surnames);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "pass --proxy, --races or --surnames to fix the race set");
  }
  const CovariateLayout* layout =
      input.proxy && input.proxy->micsg ? &input.proxy->micsg->layout() : nullptr;
  input.data = ApplySplit(LoadSupplemental(flags.input, input.races, layout),
                          flags.split, seed, false);
  manifest.inputs.push_back(flags.input);
  return input;
}

json EstimateJson(EstimatorKind kind, const EvaluationInput& input,
                  ContextAveraging averaging) {
  const std::size_t k = input.races.size();
  std::optional<ContextualPredictions> predictions;
  if (kind != EstimatorKind::kTrue) {
    if (!input.proxy) {
      throw Error(ErrorCode::kInvalidArgument,
                  "method '" + std::string(EstimatorKindName(kind)) +
                      "' needs --proxy");
    }
    predictions = EvaluateBothContexts(*input.proxy->proxy, input.data.records);
  }
  const DisparityReport report =
      EstimateRates(kind, predictions ? &*predictions : nullptr,
                    input.data.records, k, averaging);
  const std::vector<int> outcomes = Outcomes(input.data.records);

  json per_race = json::object();
  for (std::size_t r = 0; r < k; ++r) {
    // Share of race r among positive outcomes, as each method sees it.
    double composition = std::numeric_limits<double>::quiet_NaN();
    if (report.n_positive > 0.0) {
      if (kind == EstimatorKind::kTrue) {
        if (input.data.labeled()) {
          double positives = 0.0;
          for (const auto& record : input.data.records) {
            positives += record.context == 1 && *record.race == r;
          }
          composition = positives / report.n_positive;
        }
      } else {
        composition =
            ComputeContextMeans(*predictions, outcomes, r,
                                kind == EstimatorKind::kWeighted
                                    ? ContextAveraging::kObservedContext
                                    : averaging)
                .omega_bar[1];
      }
    }
    json entry = {{"mu", Number(report.estimates[r])},
                  {"composition", Number(composition)}};
    if (!report.group_sizes.empty()) entry["n_group"] = report.group_sizes[r];
    per_race[input.races.label(r)] = entry;
  }
  json disparity = json::array();
  for (const auto& row : report.disparity) {
    json out_row = json::array();
    for (double v : row) out_row.push_back(Number(v));
    disparity.push_back(out_row);
  }
  return {{"schema", 1},
          {"kind", "estimate"},
          {"method", EstimatorKindName(kind)},
          {"proxy", input.proxy ? json(input.proxy->canonical) : json(nullptr)},
          {"proxy_kind", input.proxy ? input.proxy->kind : std::string("none")},
          {"averaging", ContextAveragingName(averaging)},
          {"races", input.races.labels()},
          {"n", report.n},
          {"n_positive", report.n_positive},
          {"n_negative", report.n_negative},
          {"per_race", per_race},
          {"disparity", disparity}};
}

void RunEstimate(const EvaluateFlags& flags, const std::string& method,
                 const std::string& races_flag, Manifest& manifest) {
  const EstimatorKind kind = ParseEstimatorKind(method);
  const ContextAveraging averaging = ParseContextAveraging(flags.averaging);
  const EvaluationInput input = LoadEvaluation(flags, races_flag, manifest);
  WriteJson(flags.out, EstimateJson(kind, input, averaging));
  manifest.outputs = {flags.out};
  manifest.settings = {{"method", method},
                       {"averaging", flags.averaging},
                       {"split", SplitJson(flags.split)}};
  WriteManifest(manifest, ManifestPath(flags.out));
}

json ProfileJson(const std::vector<ViolationBin>& profile) {
  json bins = json::array();
  for (const auto& bin : profile) {
    bins.push_back({{"lower", bin.lower},
                    {"upper", bin.upper},
                    {"center", bin.center},
                    {"violation", bin.violation},
                    {"num_geos", bin.num_geos},
                    {"num_records", bin.num_records}});
  }
  return bins;
}

void RunDiagnose(const EvaluateFlags& flags, int bins, Manifest& manifest) {
  if (flags.proxy.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "diagnose needs --proxy");
  }
  const ContextAveraging averaging = ParseContextAveraging(flags.averaging);
  const EvaluationInput input = LoadEvaluation(flags, "", manifest);
  if (!input.data.labeled()) {
    throw Error(ErrorCode::kUnlabeledDataset, "diagnose needs race labels");
  }
  const std::size_t k = input.races.size();
  const ContextualPredictions predictions =
      EvaluateBothContexts(*input.proxy->proxy, input.data.records);
  const std::vector<int> outcomes = Outcomes(input.data.records);
  const ConsistencyReport report =
      MeasureConsistency(predictions, input.data.records, k, averaging);

  json per_race = json::object();
  for (std::size_t r = 0; r < k; ++r) {
    double mu = std::numeric_limits<double>::quiet_NaN();
    double mu_bayes = mu;
    double mu_weighted = mu;
    try {
      mu = TruePositiveRate(input.data.records, r);
      mu_bayes = BayesEstimate(predictions, outcomes, r, averaging);
      mu_weighted = WeightedEstimate(predictions, outcomes, r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyGroup &&
          e.code() != ErrorCode::kZeroMass &&
          e.code() != ErrorCode::kZeroDenominator) {
        throw;
      }
    }
    const double error = std::abs(mu_bayes - mu);
    json bounds = {{"epsilon", Number(error)}};
    if (std::isfinite(error)) {
      try {
        bounds["sufficient"] = SufficientConsistencyBound(
            error, report.theta[r], report.nu, report.gamma[r],
            report.omega_bar[r][1]);
        bounds["sufficient_degenerate"] = false;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateBound) throw;
        bounds["sufficient"] = nullptr;
        bounds["sufficient_degenerate"] = true;
      }
      const double necessary = NecessaryConsistencyBound(
          error, report.theta[r], report.nu, report.gamma[r], mu_bayes);
      bounds["necessary"] = necessary;
      bounds["necessary_holds"] = report.violation[r][1] <= necessary + 1e-12;
    }
    json profiles = json::object();
    for (int y = 0; y < kNumContexts; ++y) {
      profiles[std::to_string(y)] = ProfileJson(BinnedViolationProfile(
          predictions, input.data.records, r, y, bins));
    }
    per_race[input.races.label(r)] = {
        {"theta", report.theta[r]},
        {"rho", report.rho[r]},
        {"gamma", report.gamma[r]},
        {"omega_bar", {report.omega_bar[r][0], report.omega_bar[r][1]}},
        {"phi", {report.phi[r][0], report.phi[r][1]}},
        {"violation", {report.violation[r][0], report.violation[r][1]}},
        {"mu_true", Number(mu)},
        {"mu_bayes", Number(mu_bayes)},
        {"mu_weighted", Number(mu_weighted)},
        {"bounds", bounds},
        {"profile", profiles}};
  }
  json doc = {{"schema", 1},
              {"kind", "diagnose"},
              {"proxy", input.proxy->canonical},
              {"proxy_kind", input.proxy->kind},
              {"averaging", ContextAveragingName(averaging)},
              {"plug_ins", {"theta", "nu", "rho", "gamma", "omega_bar", "phi"}},
              {"races", input.races.labels()},
              {"n", report.n},
              {"nu", report.nu},
              {"bins", bins},
              {"per_race", per_race}};
  WriteJson(flags.out, doc);
  manifest.outputs = {flags.out};
  manifest.settings = {{"bins", bins},
                       {"averaging", flags.averaging},
                       {"split", SplitJson(flags.split)}};
  WriteManifest(manifest, ManifestPath(flags.out));
}

struct VerifyFlags {
  std::size_t instances = 100;
  std::string seed;
  std::string out;
  std::size_t races = 3;
  std::size_t geos = 50;
  std::size_t surnames = 200;
  double race_effect = 0.2;
  double max_lambda = 0.5;
  std::string averaging = "observed";
};

void RunVerifyTheorems(const VerifyFlags& flags, Manifest& manifest) {
  TheoremSweepConfig config;
  config.seed = RequireSeed(flags.seed, &manifest, "verify-theorems");
  config.instances = flags.instances;
  config.dgp.num_races = flags.races;
  config.dgp.num_geos = flags.geos;
  config.dgp.num_surnames = flags.surnames;
  config.dgp.race_effect = flags.race_effect;
  config.max_lambda = flags.max_lambda;
  config.averaging = ParseContextAveraging(flags.averaging);
  const TheoremSweepResult result = VerifyTheorems(config);
  json checks = json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"instance_seed", c.instance_seed},
                      {"race", c.race},
                      {"lambda", c.lambda},
                      {"epsilon", c.epsilon},
                      {"theta", c.theta},
                      {"nu", c.nu},
                      {"rho", c.rho},
                      {"gamma", c.gamma},
                      {"omega_bar", c.omega_bar},
                      {"phi", c.phi},
                      {"violation", c.violation},
                      {"mu", c.mu},
                      {"mu_bayes", c.mu_bayes},
                      {"error", c.error},
                      {"degenerate", c.degenerate},
                      {"sufficient_bound", Number(c.sufficient_bound)},
                      {"necessary_bound", c.necessary_bound},
                      {"sufficient_ok", c.sufficient_ok},
                      {"necessary_ok", c.necessary_ok},
                      {"pass", c.sufficient_ok && c.necessary_ok}});
  }
  json doc = {{"schema", 1},
              {"kind", "verify-theorems"},
              {"seed", config.seed},
              {"instances", config.instances},
              {"averaging", flags.averaging},
              {"epsilons", config.epsilons},
              {"summary",
               {{"checks", result.checks.size()},
                {"degenerate", result.degenerate},
                {"sufficient_premises", result.sufficient_premises},
                {"necessary_premises", result.necessary_premises},
                {"counterexamples", result.counterexamples},
                {"pass", result.counterexamples == 0}}},
              {"checks", checks}};
  WriteJson(flags.out, doc);
  manifest.outputs = {flags.out};
  manifest.settings = {{"instances", flags.instances},
                       {"races", flags.races},
                       {"geos", flags.geos},
                       {"surnames", flags.surnames},
                       {"race_effect", flags.race_effect},
                       {"max_lambda", flags.max_lambda}};
  WriteManifest(manifest, ManifestPath(flags.out));
}

struct FigureFlags {
  std::vector<std::string> reports;
  std::string out;
};

void RunEmitFigureData(const FigureFlags& flags, Manifest& manifest) {
  std::vector<json> docs;
  for (const auto& path : flags.reports) {
    try {
      docs.push_back(json::parse(ReadText(path)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRow,
                  "report '" + path + "' is not JSON: " + e.what());
    }
  }
  csv::WriteFile(flags.out, FigureDataCsv(docs));
  manifest.inputs = flags.reports;
  manifest.outputs = {flags.out};
  WriteManifest(manifest, ManifestPath(flags.out));
}

std::string FigureValue(const json& value) {
  return value.is_number() ? csv::FormatDouble(value.get<double>(), 12) : "";
}

void AddTableFlags(CLI::App* app, TableFlags* tables, bool required) {
  auto* s = app->add_option("--surnames", tables->surnames,
                            "Surname table CSV");
  auto* g = app->add_option("--geo", tables->geo, "Geography table CSV");
  if (required) {
    s->required();
    g->required();
  }
}

int ExitCodeFor(const Error& e) {
  return e.code() == ErrorCode::kIo ? kExitIo : kExitValidation;
}

}  // namespace

std::string FigureDataCsv(const std::vector<json>& reports) {
  std::string out = "figure,group,method,x,y,size\n";
  auto row = [&](const std::string& figure, const std::string& group,
                 const std::string& method, const std::string& x,
                 const std::string& y, const std::string& size) {
    out += csv::JoinRow({figure, group, method, x, y, size}) + "\n";
  };
  for (const auto& doc : reports) {
    const std::string kind = doc.value("kind", "");
    const auto& races = doc.at("races");
    if (kind == "estimate") {
      std::string method = doc.at("method").get<std::string>();
      const std::string proxy_kind = doc.value("proxy_kind", "none");
      if (proxy_kind != "none") method += "+" + proxy_kind;
      const std::string n_positive = FigureValue(doc.at("n_positive"));
      for (std::size_t r = 0; r < races.size(); ++r) {
        const std::string label = races[r].get<std::string>();
        const auto& entry = doc.at("per_race").at(label);
        const std::string size = entry.contains("n_group")
                                     ? FigureValue(entry.at("n_group"))
                                     : FigureValue(doc.at("n"));
        row("rates", label, method, std::to_string(r),
            FigureValue(entry.at("mu")), size);
      }
      for (std::size_t r = 0; r < races.size(); ++r) {
        const std::string label = races[r].get<std::string>();
        row("composition", label, method, std::to_string(r),
            FigureValue(doc.at("per_race").at(label).at("composition")),
            n_positive);
      }
    } else if (kind == "diagnose") {
      const std::string method = doc.value("proxy_kind", "proxy");
      for (const auto& race : races) {
        const std::string label = race.get<std::string>();
        for (const auto& bin : doc.at("per_race").at(label).at("profile").at("1")) {
          row("consistency", label, method, FigureValue(bin.at("center")),
              FigureValue(bin.at("violation")), FigureValue(bin.at("num_geos")));
        }
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "report kind '" + kind + "' has no figure data");
    }
  }
  return out;
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Race-proxy fitting and disparity estimation", "fairproxy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateFlags simulate;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Generate a synthetic population");
  simulate_cmd->add_option("--config", simulate.config, "DGP options (JSON)");
  simulate_cmd->add_option("--n", simulate.n, "Supplemental sample size");
  simulate_cmd->add_option("--seed", simulate.seed, "Random seed");
  simulate_cmd->add_option("--out-dir", simulate.out_dir, "Output directory")
      ->required();

  IngestFlags ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "Validate input tables");
  AddTableFlags(ingest_cmd, &ingest.tables, true);
  ingest_cmd->add_option("--supplemental", ingest.supplemental,
                         "Supplemental dataset CSV");
  ingest_cmd->add_option("--export", ingest.export_dir,
                         "Directory for derived probability tables");
  ingest_cmd->add_option("--out", ingest.out, "Summary JSON")->required();

  PredictBisgFlags predict_bisg;
  auto* predict_bisg_cmd =
      app.add_subcommand("predict-bisg", "BISG race probabilities");
  AddTableFlags(predict_bisg_cmd, &predict_bisg.tables, true);
  predict_bisg_cmd->add_option("--input", predict_bisg.input, "Records CSV")
      ->required();
  predict_bisg_cmd->add_option("--out", predict_bisg.out, "Predictions CSV")
      ->required();

  FitCbisgFlags fit_cbisg;
  auto* fit_cbisg_cmd = app.add_subcommand("fit-cbisg", "Fit contextual BISG");
  AddTableFlags(fit_cbisg_cmd, &fit_cbisg.tables, true);
  fit_cbisg_cmd->add_option("--train", fit_cbisg.train, "Labeled CSV")
      ->required();
  fit_cbisg_cmd->add_option("--eta", fit_cbisg.eta,
                            "Fixed eta in [0,1] or 'tune'");
  fit_cbisg_cmd->add_option("--grid,--eta-grid", fit_cbisg.eta_grid,
                            "Tuning grid start:stop:step");
  fit_cbisg_cmd->add_option("--tune-estimator", fit_cbisg.tune_estimator,
                            "bayes|weighted");
  fit_cbisg_cmd->add_option("--averaging", fit_cbisg.averaging,
                            "observed|all-records");
  fit_cbisg_cmd->add_option("--default-eta", fit_cbisg.default_eta,
                            "Eta for geos without training records");
  fit_cbisg_cmd->add_option("--split", fit_cbisg.split,
                            "Train fraction of a hashed-id split")
      ->check(CLI::Range(0.0, 1.0));
  fit_cbisg_cmd->add_option("--seed", fit_cbisg.seed, "Split seed");
  fit_cbisg_cmd->add_option("--model-out", fit_cbisg.model_out, "Model CSV")
      ->required();

  FitMicsgFlags fit_micsg;
  auto* fit_micsg_cmd = app.add_subcommand("fit-micsg", "Fit MICSG");
  fit_micsg_cmd->add_option("--base", fit_micsg.base,
                            "bisg | cbisg:<model> | oracle:<joint table>")
      ->required();
  AddTableFlags(fit_micsg_cmd, &fit_micsg.tables, false);
  fit_micsg_cmd->add_option("--train", fit_micsg.train, "Labeled CSV")
      ->required();
  fit_micsg_cmd->add_option("--lambda", fit_micsg.lambda, "L2 strength");
  fit_micsg_cmd->add_option("--tol", fit_micsg.tolerance,
                            "Gradient infinity-norm tolerance");
  fit_micsg_cmd->add_option("--max-iters", fit_micsg.max_iters,
                            "Iteration cap");
  fit_micsg_cmd->add_option("--encoding", fit_micsg.encoding,
                            "log-probability|probability");
  fit_micsg_cmd->add_option("--split", fit_micsg.split,
                            "Train fraction of a hashed-id split")
      ->check(CLI::Range(0.0, 1.0));
  fit_micsg_cmd->add_option("--seed", fit_micsg.seed, "Seed");
  fit_micsg_cmd->add_option("--model-out", fit_micsg.model_out, "Model JSON")
      ->required();

  PredictMicsgFlags predict_micsg;
  auto* predict_micsg_cmd =
      app.add_subcommand("predict-micsg", "MICSG race probabilities");
  predict_micsg_cmd->add_option("--model", predict_micsg.model, "Model JSON")
      ->required();
  predict_micsg_cmd->add_option("--input", predict_micsg.input, "Records CSV")
      ->required();
  predict_micsg_cmd->add_option("--context", predict_micsg.context,
                                "0|1|observed");
  predict_micsg_cmd->add_option("--out", predict_micsg.out, "Predictions CSV")
      ->required();

  EvaluateFlags estimate;
  std::string method;
  std::string races_flag;
  auto* estimate_cmd =
      app.add_subcommand("estimate", "Per-race positive rates and disparity");
  estimate_cmd->add_option("--method", method, "true|weighted|bayes")
      ->required();
  estimate_cmd->add_option("--proxy", estimate.proxy,
                           "bisg | cbisg:<model> | micsg:<model> | "
                           "oracle:<joint table>");
  AddTableFlags(estimate_cmd, &estimate.tables, false);
  estimate_cmd->add_option("--point", estimate.tables.point,
                           "cBISG point estimate: mean|sample");
  estimate_cmd->add_option("--races", races_flag,
                           "Comma-separated races when no proxy is given");
  estimate_cmd->add_option("--input", estimate.input, "Records CSV")
      ->required();
  estimate_cmd->add_option("--out", estimate.out, "Report JSON")->required();
  estimate_cmd->add_option("--averaging", estimate.averaging,
                           "observed|all-records");
  estimate_cmd->add_option("--split", estimate.split,
                           "Evaluate on the test part of a hashed-id split")
      ->check(CLI::Range(0.0, 1.0));
  estimate_cmd->add_option("--seed", estimate.seed, "Seed");

  EvaluateFlags diagnose;
  int bins = 8;
  auto* diagnose_cmd =
      app.add_subcommand("diagnose", "Mean-consistency diagnostics");
  diagnose_cmd->add_option("--proxy", diagnose.proxy, "Proxy, as for estimate")->required();
  AddTableFlags(diagnose_cmd, &diagnose.tables, false);
  diagnose_cmd->add_option("--point", diagnose.tables.point,
                           "cBISG point estimate: mean|sample");
  diagnose_cmd->add_option("--input", diagnose.input, "Labeled CSV")
      ->required();
  diagnose_cmd->add_option("--bins", bins, "Profile bins");
  diagnose_cmd->add_option("--out", diagnose.out, "Report JSON")->required();
  diagnose_cmd->add_option("--averaging", diagnose.averaging,
                           "observed|all-records");
  diagnose_cmd->add_option("--split", diagnose.split,
                           "Evaluate on the test part of a hashed-id split")
      ->check(CLI::Range(0.0, 1.0));
  diagnose_cmd->add_option("--seed", diagnose.seed, "Seed");

  VerifyFlags verify;
  auto* verify_cmd = app.add_subcommand(
      "verify-theorems", "Population-level bound sweep on random tables");
  verify_cmd->add_option("--instances", verify.instances, "Random instances");
  verify_cmd->add_option("--seed", verify.seed, "Seed");
  verify_cmd->add_option("--out", verify.out, "Report JSON")->required();
  verify_cmd->add_option("--num-races", verify.races, "K");
  verify_cmd->add_option("--num-geos", verify.geos, "Geographies");
  verify_cmd->add_option("--num-surnames", verify.surnames, "Surnames");
  verify_cmd->add_option("--race-effect", verify.race_effect,
                         "Race shift range of Pr[Y=1|R,G]");
  verify_cmd->add_option("--max-lambda", verify.max_lambda,
                         "Largest mixing weight");
  verify_cmd->add_option("--averaging", verify.averaging,
                         "observed|all-records");

  FigureFlags figure;
  auto* figure_cmd = app.add_subcommand("emit-figure-data",
                                        "Tidy CSV from report JSON files");
  figure_cmd->add_option("--reports", figure.reports, "Report JSON files");
  figure_cmd->add_option("--out", figure.out, "Output CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty()
                          ? static_cast<const CLI::App*>(&app)
                          : app.get_subcommands().front();
    err << sub->help();
    return kExitValidation;
  }

  Manifest manifest;
  manifest.args = args;
  try {
    if (simulate_cmd->parsed()) {
      manifest.subcommand = "simulate";
      RunSimulate(simulate, manifest);
    } else if (ingest_cmd->parsed()) {
      manifest.subcommand = "ingest-check";
      RunIngestCheck(ingest, manifest);
    } else if (predict_bisg_cmd->parsed()) {
      manifest.subcommand = "predict-bisg";
      RunPredictBisg(predict_bisg, manifest);
    } else if (fit_cbisg_cmd->parsed()) {
      manifest.subcommand = "fit-cbisg";
      RunFitCbisg(fit_cbisg, manifest);
    } else if (fit_micsg_cmd->parsed()) {
      manifest.subcommand = "fit-micsg";
      RunFitMicsg(fit_micsg, manifest);
    } else if (predict_micsg_cmd->parsed()) {
      manifest.subcommand = "predict-micsg";
      RunPredictMicsg(predict_micsg, manifest);
    } else if (estimate_cmd->parsed()) {
      manifest.subcommand = "estimate";
      RunEstimate(estimate, method, races_flag, manifest);
    } else if (diagnose_cmd->parsed()) {
      manifest.subcommand = "diagnose";
      RunDiagnose(diagnose, bins, manifest);
    } else if (verify_cmd->parsed()) {
      manifest.subcommand = "verify-theorems";
      RunVerifyTheorems(verify, manifest);
    } else if (figure_cmd->parsed()) {
      manifest.subcommand = "emit-figure-data";
      RunEmitFigureData(figure, manifest);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace fairproxy::cli
