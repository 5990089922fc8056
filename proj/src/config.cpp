#include "nhns/config.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include "nhns/error.hpp"
#include "nhns/io.hpp"

namespace nhns {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DomainError("config key '" + key + "': bad number '" + text + "'");
  return v;
}

}  // namespace

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> d{
      {"seed", "0"},
      {"dim", "1"},
      {"n", "512"},
      {"tau", "1"},
      {"eps", "0.01"},
      {"t_end", "4"},
      {"record_every", "1"},
      {"eps_tol", "1e-8"},
      {"max_outer", "1000"},
      {"gmres_tol", "1e-10"},
      {"gmres_restart", "50"},
      {"gmres_max_iter", "2000"},
      {"krylov_dim", "10"},
      {"tau_etd", "1"},
      {"n_train", "3200"},
      {"n_test", "320"},
      {"modes", "128"},
      {"m1", "16"},
      {"m2", "16"},
      {"decay", "0.25"},
      {"decay_2d", "false"},
      {"epochs", "500"},
      {"lr0", "4e-4"},
      {"lr_halving_period", "50"},
      {"weight_decay", "1e-7"},
      {"batch_size", "32"},
      {"kernel", "21"},
      {"channels", "1,8,16,32,64,32,16,8,1"},
      {"taus", "0.5,1,2"},
      {"seeds", "100"},
      {"repetitions", "5"},
  };
  return d;
}

bool Config::known(std::string_view key) { return defaults().count(std::string(key)) > 0; }

Config::Config() : values_(defaults()) {}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw DomainError("unknown config key '" + key + "'");
  values_[key] = value;
}

void Config::merge_text(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  merge_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

void Config::merge_env() {
  if (const char* s = std::getenv("NHNS_SEED")) {
    const std::string v = trim(s);
    parse_number<std::uint64_t>("NHNS_SEED", v);
    values_["seed"] = v;
  }
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw DomainError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }
std::uint64_t Config::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }
std::size_t Config::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }
int Config::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DomainError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  if (out.empty()) throw DomainError("config key '" + key + "' is empty");
  return out;
}

std::string Config::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace nhns
