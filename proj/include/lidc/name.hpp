#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lidc {

enum class NameErrc {
  MalformedUri,
  MissingKey,
  BadValue,
  DuplicateKey,
  UnknownPrefix,
};

class NameError : public std::runtime_error
{
public:
  NameError(NameErrc code, const std::string& what)
    : std::runtime_error(what)
    , m_code(code)
  {
  }

  NameErrc code() const noexcept { return m_code; }

private:
  NameErrc m_code;
};

/// Byte sets that percent_escape leaves untouched. Everything outside 0x21-0x7E is
/// always escaped, as is '%'.
enum class EscapeSet {
  /// URI component rendering: escapes '/'.
  UriComponent,
  /// Compute-parameter values: escapes '/', '&', '=', ','.
  ParamValue,
};

std::string percent_escape(std::string_view raw, EscapeSet set);

/// Decodes %XX escapes (hex digits of either case). Throws NameError(MalformedUri) on a
/// truncated or non-hex escape.
std::string percent_unescape(std::string_view text);

/// Hierarchical name. Each component is a non-empty byte string.
class Name
{
public:
  Name() = default;
  Name(std::initializer_list<std::string> components);
  explicit Name(std::vector<std::string> components);

  /// Parses "/a/b/c" URI text. Throws NameError(MalformedUri).
  static Name parse(std::string_view uri);

  std::string to_uri() const;

  std::size_t size() const noexcept { return m_components.size(); }
  bool empty() const noexcept { return m_components.empty(); }
  const std::string& operator[](std::size_t i) const { return m_components[i]; }
  const std::string& back() const { return m_components.back(); }
  const std::vector<std::string>& components() const noexcept { return m_components; }

  Name append(std::string component) const;
  Name prefix(std::size_t count) const;

  /// True when every component of this name equals the corresponding leading
  /// component of `other`.
  bool is_prefix_of(const Name& other) const noexcept;

  // Component-by-component bytewise; a proper prefix sorts first.
  friend std::strong_ordering operator<=>(const Name& a, const Name& b);
  friend bool operator==(const Name& a, const Name& b) = default;

private:
  std::vector<std::string> m_components;
};

inline Name parse_uri(std::string_view text) { return Name::parse(text); }
inline std::string to_uri(const Name& n) { return n.to_uri(); }
inline bool is_prefix_of(const Name& p, const Name& n) noexcept { return p.is_prefix_of(n); }

std::ostream& operator<<(std::ostream& os, const Name& name);

namespace prefixes {

const Name& root();
const Name& k8s();
const Name& compute();
const Name& status();
const Name& data();
const Name& results();

} // namespace prefixes

} // namespace lidc
