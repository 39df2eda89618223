#include "cgnp/cli/episode_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cgnp {

using nlohmann::json;

std::string serialize_episode(const Episode& ep) {
  json j;
  j["x_c"] = ep.x_c;
  j["y_c"] = ep.y_c;
  j["x_t"] = ep.x_t;
  j["y_t"] = ep.y_t;
  return j.dump();
}

Episode parse_episode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed episode record: ") + e.what());
  }
  Episode ep;
  try {
    ep.x_c = j.at("x_c").get<std::vector<double>>();
    ep.y_c = j.at("y_c").get<std::vector<double>>();
    ep.x_t = j.at("x_t").get<std::vector<double>>();
    ep.y_t = j.at("y_t").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError(std::string("episode record: ") + e.what());
  }
  if (ep.x_c.empty() || ep.x_c.size() != ep.y_c.size() || ep.x_t.empty() || ep.x_t.size() != ep.y_t.size()) {
    throw IoError("episode record: context/target arrays must be non-empty and paired");
  }
  return ep;
}

std::string serialize_episodes(std::span<const Episode> episodes) {
  std::string out;
  for (const Episode& ep : episodes) {
    out += serialize_episode(ep);
    out += '\n';
  }
  return out;
}

std::vector<Episode> parse_episodes(std::string_view text) {
  std::vector<Episode> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(parse_episode(line));
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_episodes(const std::filesystem::path& path, std::span<const Episode> episodes) {
  write_file_atomic(path, serialize_episodes(episodes));
}

std::vector<Episode> read_episodes(const std::filesystem::path& path) {
  std::vector<Episode> eps = parse_episodes(read_file(path));
  if (eps.empty()) throw IoError("episode file " + path.string() + " contains no episodes");
  return eps;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cgnp
