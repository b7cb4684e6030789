#include "lidc/name.hpp"

#include <algorithm>
#include <ostream>

namespace lidc {

namespace {

bool must_escape(unsigned char c, EscapeSet set)
{
  if (c < 0x21 || c > 0x7E || c == '%' || c == '/') {
    return true;
  }
  return set == EscapeSet::ParamValue && (c == '&' || c == '=' || c == ',');
}

int hex_digit(char c)
{
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

std::string percent_escape(std::string_view raw, EscapeSet set)
{
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (must_escape(c, set)) {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0x0F]);
    }
    else {
      out.push_back(ch);
    }
  }
  return out;
}

std::string percent_unescape(std::string_view text)
{
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 2 >= text.size()) {
      throw NameError(NameErrc::MalformedUri, "truncated percent escape");
    }
    int hi = hex_digit(text[i + 1]);
    int lo = hex_digit(text[i + 2]);
    if (hi < 0 || lo < 0) {
      throw NameError(NameErrc::MalformedUri, "invalid percent escape");
    }
    out.push_back(static_cast<char>(hi << 4 | lo));
    i += 2;
  }
  return out;
}

Name::Name(std::initializer_list<std::string> components)
  : Name(std::vector<std::string>(components))
{
}

Name::Name(std::vector<std::string> components)
  : m_components(std::move(components))
{
  for (const auto& c : m_components) {
    if (c.empty()) {
      throw NameError(NameErrc::MalformedUri, "empty name component");
    }
  }
}

Name Name::parse(std::string_view uri)
{
  if (uri.empty() || uri.front() != '/') {
    throw NameError(NameErrc::MalformedUri, "name must begin with '/'");
  }
  Name name;
  if (uri.size() == 1) {
    return name;
  }
  std::size_t pos = 1;
  while (true) {
    auto slash = uri.find('/', pos);
    auto text = uri.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
    if (text.empty()) {
      throw NameError(NameErrc::MalformedUri, "empty name component");
    }
    name.m_components.push_back(percent_unescape(text));
    if (slash == std::string_view::npos) {
      break;
    }
    pos = slash + 1;
  }
  return name;
}

std::string Name::to_uri() const
{
  if (m_components.empty()) {
    return "/";
  }
  std::string out;
  for (const auto& c : m_components) {
    out.push_back('/');
    out += percent_escape(c, EscapeSet::UriComponent);
  }
  return out;
}

Name Name::append(std::string component) const
{
  if (component.empty()) {
    throw NameError(NameErrc::MalformedUri, "empty name component");
  }
  Name out = *this;
  out.m_components.push_back(std::move(component));
  return out;
}

Name Name::prefix(std::size_t count) const
{
  Name out;
  count = std::min(count, m_components.size());
  out.m_components.assign(m_components.begin(), m_components.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

bool Name::is_prefix_of(const Name& other) const noexcept
{
  if (m_components.size() > other.m_components.size()) {
    return false;
  }
  return std::equal(m_components.begin(), m_components.end(), other.m_components.begin());
}

std::strong_ordering operator<=>(const Name& a, const Name& b)
{
  std::size_t n = std::min(a.m_components.size(), b.m_components.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = a.m_components[i].compare(b.m_components[i]);
    if (c != 0) {
      return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
  }
  return a.m_components.size() <=> b.m_components.size();
}

std::ostream& operator<<(std::ostream& os, const Name& name) { return os << name.to_uri(); }

namespace prefixes {

const Name& root()
{
  static const Name n;
  return n;
}

const Name& k8s()
{
  static const Name n{"ndn", "k8s"};
  return n;
}

const Name& compute()
{
  static const Name n{"ndn", "k8s", "compute"};
  return n;
}

const Name& status()
{
  static const Name n{"ndn", "k8s", "status"};
  return n;
}

const Name& data()
{
  static const Name n{"ndn", "k8s", "data"};
  return n;
}

const Name& results()
{
  static const Name n{"ndn", "k8s", "data", "results"};
  return n;
}

} // namespace prefixes

} // namespace lidc
