#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcrnn/graph.hpp"

namespace dcrnn {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<DistanceRecord> load_distances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<DistanceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (!header_skipped) {
      header_skipped = true;  // first non-empty line is the header
      continue;
    }
    std::istringstream ss(s);
    std::string from, to, dist;
    if (!std::getline(ss, from, ',') || !std::getline(ss, to, ',') || !std::getline(ss, dist)) {
      throw Error("bad distance record at " + path.string() + ":" + std::to_string(line_no));
    }
    char* end = nullptr;
    const std::string dtrim = strip(dist);
    const double d = std::strtod(dtrim.c_str(), &end);
    if (end == dtrim.c_str() || *end != '\0') {
      throw Error("bad distance value at " + path.string() + ":" + std::to_string(line_no));
    }
    out.push_back({strip(from), strip(to), d});
  }
  return out;
}

std::vector<std::string> load_node_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = strip(line);
    if (!s.empty()) ids.push_back(s);
  }
  if (ids.empty()) throw Error("empty node list: " + path.string());
  return ids;
}

void save_graph(const WeightedDigraph& g, const std::filesystem::path& path) {
  save_triplets(path, g.weights());
  std::filesystem::path meta = path;
  meta += ".meta";
  std::ofstream out(meta);
  if (!out) throw Error("cannot open for writing: " + meta.string());
  char buf[64];
  out << "n=" << g.n() << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", g.kernel_sigma());
  out << "sigma=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", g.kernel_kappa());
  out << "kappa=" << buf << '\n';
  for (const std::string& id : g.node_ids()) out << "node=" << id << '\n';
}

WeightedDigraph load_graph(const std::filesystem::path& path) {
  std::filesystem::path meta = path;
  meta += ".meta";
  std::ifstream in(meta);
  if (!in) throw Error("cannot open: " + meta.string());
  std::size_t n = 0;
  double sigma = 0.0, kappa = 0.0;
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = strip(line);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw Error("bad metadata line in " + meta.string() + ": " + s);
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    if (key == "n") {
      n = std::stoul(value);
    } else if (key == "sigma") {
      sigma = std::stod(value);
    } else if (key == "kappa") {
      kappa = std::stod(value);
    } else if (key == "node") {
      ids.push_back(value);
    } else {
      throw Error("unknown metadata key '" + key + "' in " + meta.string());
    }
  }
  if (ids.size() != n) {
    throw Error("metadata mismatch in " + meta.string() + ": n=" + std::to_string(n) + " but " +
                std::to_string(ids.size()) + " node entries");
  }
  return WeightedDigraph(std::move(ids), load_triplets(path, n, n), sigma, kappa);
}

}  // namespace dcrnn
