#include "cloudsched/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cloudsched {

namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view s)
{
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return std::string(s.substr(1, s.size() - 2));
    return std::string(s);
}

// strips a trailing comment that is not inside quotes
std::string_view strip_comment(std::string_view line)
{
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == quote)
                quote = 0;
        }
        else if (c == '"' || c == '\'') {
            quote = c;
        }
        else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source)
{
    KeyValueConfig cfg;
    cfg.source_ = std::string(source);
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = trim(strip_comment(text.substr(pos, end - pos)));
        pos = end + 1;
        ++line_no;
        if (line.empty())
            continue;

        auto fail = [&](const std::string& what) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
        };

        if (line.front() == '[' && line.find('=') == std::string_view::npos) {
            if (line.back() != ']')
                fail("unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail("expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            fail("empty key");
        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (cfg.values_.contains(full))
            fail("duplicate key '" + full + "'");
        cfg.values_[full] = value.starts_with("[") ? std::string(value) : unquote(value);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

namespace {

template <typename T>
T parse_scalar(const std::string& text, const std::string& key, const std::string& source)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ConfigError(source + ": key '" + key + "' has invalid value '" + text + "'");
    return v;
}

} // namespace

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    const auto v = get(key);
    return v ? parse_scalar<double>(*v, key, source_) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const
{
    const auto v = get(key);
    return v ? parse_scalar<long long>(*v, key, source_) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    if (*v == "true")
        return true;
    if (*v == "false")
        return false;
    throw ConfigError(source_ + ": key '" + key + "' expects true or false");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const
{
    const auto v = get(key);
    if (!v)
        return {};
    std::string_view body = trim(*v);
    if (body.starts_with("[")) {
        if (!body.ends_with("]"))
            throw ConfigError(source_ + ": key '" + key + "' has an unterminated list");
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= body.size()) {
        auto comma = body.find(',', start);
        if (comma == std::string_view::npos)
            comma = body.size();
        const auto item = unquote(body.substr(start, comma - start));
        if (!item.empty())
            out.push_back(item);
        start = comma + 1;
    }
    return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& item : get_list(key))
        out.push_back(parse_scalar<double>(item, key, source_));
    return out;
}

} // namespace cloudsched
