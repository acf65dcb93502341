#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ddc/token_event.hpp"

namespace ddc {

// One in-flight reasoning path. The engine pulls events until the stream
// ends (natural completion) or it calls cancel(). After cancel(), next()
// must not deliver further events.
class PathStream {
   public:
    virtual ~PathStream() = default;

    // Next token event, or nullopt once the path is finished or cancelled.
    // Transport problems surface as TransportError.
    virtual std::optional<TokenEvent> next() = 0;

    // Full generated text; meaningful only after next() returned nullopt
    // without cancellation.
    virtual std::string final_text() = 0;

    // Cooperative cancellation (prune or global stop). Idempotent.
    virtual void cancel() = 0;
};

// Produces paths for one query. Implementations: synthetic generator,
// trace replay, live endpoint.
class PathSource {
   public:
    virtual ~PathSource() = default;

    // Starts a new path; nullptr when the source has run dry (replay only).
    virtual std::unique_ptr<PathStream> start_path() = 0;
};

}  // namespace ddc
