#include "calib/model_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace calib {

namespace {

using nlohmann::json;

json node_to_json(const SimplexPartitionModel& model, int id) {
  const PartitionNode& node = model.nodes[id];
  json j;
  j["id"] = id;
  j["count"] = node.count;
  j["mass"] = node.mass;
  j["value"] = node.value;
  j["raw_mean"] = node.raw_mean;
  j["created_at"] = node.created_at;
  if (node.is_split) {
    j["gamma"] = node.gamma.coords;
    j["expanded_at"] = node.expanded_at;
    json kids = json::array();
    for (int c : node.children) kids.push_back(node_to_json(model, c));
    j["children"] = std::move(kids);
  }
  return j;
}

void node_from_json(const json& j, SimplexPartitionModel& model) {
  const int id = j.at("id").get<int>();
  if (id < 0) throw InputError("model: negative node id");
  if (static_cast<std::size_t>(id) >= model.nodes.size()) {
    model.nodes.resize(static_cast<std::size_t>(id) + 1);
  }
  PartitionNode& node = model.nodes[id];
  node.count = j.at("count").get<std::size_t>();
  node.mass = j.at("mass").get<double>();
  node.value = j.at("value").get<std::vector<double>>();
  node.raw_mean = j.at("raw_mean").get<std::vector<double>>();
  node.created_at = j.at("created_at").get<std::size_t>();
  if (j.contains("children")) {
    node.is_split = true;
    node.gamma = AffineThreshold(j.at("gamma").get<std::vector<double>>());
    node.expanded_at = j.at("expanded_at").get<std::size_t>();
    for (const auto& kid : j.at("children")) {
      node_from_json(kid, model);
      model.nodes[id].children.push_back(kid.at("id").get<int>());
    }
  }
}

}  // namespace

std::string model_to_json(const ModelFile& mf) {
  json j;
  j["schema_version"] = mf.schema_version;
  j["method"] = mf.method;
  j["k"] = mf.k;
  j["alpha"] = mf.alpha;
  j["fit"] = {{"n", mf.n},
              {"seed", mf.seed},
              {"candidate_source", mf.candidate_source},
              {"timestamp", mf.timestamp}};
  json payload;
  if (mf.binned.has_value()) {
    const IsotonicModel& m = *mf.binned;
    std::vector<double> interior(m.boundaries.begin() + 1, m.boundaries.end() - 1);
    payload["interior_boundaries"] = interior;
    payload["values"] = m.values;
    payload["counts"] = m.counts;
  } else if (mf.partition.has_value()) {
    payload["root"] = node_to_json(*mf.partition, 0);
    json log = json::array();
    for (const auto& e : mf.partition->split_log) {
      log.push_back({{"iteration", e.iteration},
                     {"region", e.region_id},
                     {"m", e.criterion},
                     {"gamma", e.gamma.coords}});
    }
    payload["split_log"] = std::move(log);
  } else {
    throw ContractError("model: no payload to serialize");
  }
  j["payload"] = std::move(payload);
  return j.dump(2);
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    ModelFile mf;
    mf.schema_version = j.at("schema_version").get<int>();
    if (mf.schema_version != 1) {
      throw InputError("model: unsupported schema_version " +
                       std::to_string(mf.schema_version));
    }
    mf.method = j.at("method").get<std::string>();
    mf.k = j.at("k").get<int>();
    mf.alpha = j.at("alpha").get<double>();
    const auto& fit = j.at("fit");
    mf.n = fit.at("n").get<std::size_t>();
    mf.seed = fit.at("seed").get<std::uint64_t>();
    mf.candidate_source = fit.at("candidate_source").get<std::string>();
    mf.timestamp = fit.at("timestamp").get<std::string>();
    const auto& payload = j.at("payload");
    if (payload.contains("values")) {
      IsotonicModel m;
      const auto interior = payload.at("interior_boundaries").get<std::vector<double>>();
      m.boundaries.push_back(-std::numeric_limits<double>::infinity());
      m.boundaries.insert(m.boundaries.end(), interior.begin(), interior.end());
      m.boundaries.push_back(std::numeric_limits<double>::infinity());
      m.values = payload.at("values").get<std::vector<double>>();
      m.counts = payload.at("counts").get<std::vector<std::size_t>>();
      if (m.values.size() != m.counts.size() ||
          m.values.size() + 1 != m.boundaries.size()) {
        throw InputError("model: inconsistent binned payload");
      }
      mf.binned = std::move(m);
    } else if (payload.contains("root")) {
      SimplexPartitionModel m;
      m.k = mf.k;
      m.alpha = mf.alpha;
      node_from_json(payload.at("root"), m);
      for (const auto& e : payload.at("split_log")) {
        m.split_log.push_back(
            SplitLogEntry{e.at("iteration").get<std::size_t>(),
                          e.at("region").get<int>(),
                          AffineThreshold(e.at("gamma").get<std::vector<double>>()),
                          e.at("m").get<double>()});
      }
      mf.partition = std::move(m);
    } else {
      throw InputError("model: payload holds neither bins nor a partition tree");
    }
    return mf;
  } catch (const json::exception& e) {
    throw InputError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const ModelFile& mf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  out << model_to_json(mf) << "\n";
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::vector<double> apply_model_file(const ModelFile& mf, std::span<const double> p) {
  if (static_cast<int>(p.size()) != mf.k) {
    throw ContractError("apply: forecast has dimension " + std::to_string(p.size()) +
                        ", model expects " + std::to_string(mf.k));
  }
  if (mf.binned.has_value()) {
    const double v = pav_predict(*mf.binned, p[1]);
    return {1.0 - v, v};
  }
  return apply_model(*mf.partition, p);
}

std::size_t model_bins(const ModelFile& mf) {
  if (mf.binned.has_value()) return mf.binned->bins();
  return leaf_count(*mf.partition);
}

}  // namespace calib
