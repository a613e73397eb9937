#include "metaseg/errors.hpp"

namespace metaseg {

namespace {

template <typename E>
[[noreturn]] void rewrap(const E& e, const std::string& context) {
  throw E(context + e.what());
}

}  // namespace

void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const TruncationError& e) {
    rewrap(e, context);
  } catch (const FormatError& e) {
    rewrap(e, context);
  } catch (const DataError& e) {
    rewrap(e, context);
  } catch (const IoError& e) {
    rewrap(e, context);
  } catch (const ShapeError& e) {
    rewrap(e, context);
  } catch (const EmptyDataError& e) {
    rewrap(e, context);
  } catch (const InsufficientDataError& e) {
    rewrap(e, context);
  } catch (const ConfigError& e) {
    rewrap(e, context);
  } catch (const MissingLabelError& e) {
    rewrap(e, context);
  } catch (const DivergenceError& e) {
    rewrap(e, context);
  } catch (const ConsistencyError& e) {
    rewrap(e, context);
  } catch (const DegenerateBaselineError& e) {
    rewrap(e, context);
  } catch (const Error& e) {
    rewrap(e, context);
  }
}

}  // namespace metaseg
