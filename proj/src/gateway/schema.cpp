#include "flowscribe/gateway/server.hpp"

namespace flowscribe::gateway {

const nlohmann::json& api_schema() {
    static const nlohmann::json schema = nlohmann::json::parse(R"json({
  "version": 1,
  "errors": {
    "body": {"error": "string", "diagnostics?": "[Diagnostic]"},
    "400": "malformed request or invalid parameter",
    "404": "unknown session, run or catalogue entry",
    "409": "a run is already live in the session, or the run has finished",
    "422": "spec parse or compile errors (body carries diagnostics); failed synthesis",
    "502": "the LLM endpoint could not be reached"
  },
  "types": {
    "Diagnostic": {"severity": "error|warning", "span": "[begin, end) byte offsets", "message": "string"},
    "Provenance": {"model_id": "string", "bundle_hash": "sha256 hex", "template_version": "string",
                   "spec_hash": "sha256 hex of the canonical spec", "repair_rounds": "integer"},
    "Perturbation": {"kind": "scatter|triangle|displacements", "indices?": "[integer]",
                     "displacements?": "[[dx, dy]] one per affected particle", "magnitude?": "number (µm)",
                     "seed?": "integer"},
    "Frame": {"run_id": "string", "cycle": "integer", "positions": "[[x, y]]",
              "plan": "[{kind, center: [x, y], angle, amplitude}]", "objective": "number",
              "predicted": "number", "squareness": "number|null", "density_ratio": "number|null",
              "accepted": "bool", "converged": "bool", "advections": "integer",
              "events": "[{cycle, kind, detail}]"},
    "RunStatus": {"run_id": "string", "session_id": "string", "mode": "potential|inverse", "n": "integer",
                  "frames": "integer", "live": "bool", "stop_reason": "cycles|target|converged|cancelled|error|null",
                  "converged": "bool", "error": "string|null", "entry_id": "string|null",
                  "archive": "path", "events": "url", "replayed?": "bool"},
    "CatalogueEntry": {"id": "string", "prompt": "string", "spec_text": "string", "score": "number|null",
                       "user_feedback": "string", "verdict": "DO|DONT", "rated": "bool", "rating": "1-5|null",
                       "parseable": "bool", "created_at": "ms since epoch", "revision": "integer",
                       "model_id": "string", "template_version": "string"}
  },
  "routes": [
    {"method": "GET", "path": "/health", "response": {"status": "ok", "version": "string", "live_runs": "integer",
                                                      "catalogue_entries": "integer"}},
    {"method": "GET", "path": "/version", "response": {"version": "string"}},
    {"method": "GET", "path": "/schema", "response": "this document"},
    {"method": "POST", "path": "/sessions", "status": 201, "response": {"session_id": "string", "config": "object"}},
    {"method": "GET", "path": "/sessions/{id}",
     "response": {"session_id": "string", "run_id": "string|null", "last_prompt": "string|null",
                  "last_spec_text": "string|null", "last_entry_id": "string|null"}},
    {"method": "POST", "path": "/sessions/{id}/synthesize",
     "request": {"prompt": "string", "budget?": "integer (default 10)"},
     "response": {"spec_text": "canonical spec", "provenance": "Provenance", "entry_id": "string"},
     "failure": {"error": "string", "failure": "extraction|parse|transport", "transcript": "string|null",
                 "diagnostics": "[Diagnostic]", "provenance": "Provenance", "entry_id": "string|null"}},
    {"method": "POST", "path": "/sessions/{id}/runs", "status": 201,
     "headers": {"Idempotency-Key?": "repeat with the same body returns the same run (200, replayed=true)"},
     "request": {"spec_text?": "string (default: the session's last synthesized spec)",
                 "mode?": "potential|inverse (default inverse)", "n?": "integer (default: the spec's :n)",
                 "n_paths?": "integer (default 7)", "primitive?": "linear-lut|circular|saddle|shear",
                 "seed?": "integer", "cycles?": "integer (default 60)", "target?": "number",
                 "descent_iters?": "integer", "sqp_iters?": "integer", "a_max?": "number",
                 "constraints?": {"d_min": "number", "a_min": "number", "a_max": "number",
                                  "displacement_cap": "number", "center_bounds": "[x0, y0, x1, y1]",
                                  "keepout": "[{center: [x, y], radius}]"},
                 "fov_half?": "number (default 50)", "init_half?": "number (default 30)",
                 "perturbations?": "[{cycle, perturbation: Perturbation}]",
                 "entry_id?": "catalogue entry that feedback on this run updates", "prompt?": "string"},
     "response": "RunStatus"},
    {"method": "GET", "path": "/runs/{rid}", "response": "RunStatus"},
    {"method": "GET", "path": "/runs/{rid}/events", "content_type": "text/event-stream",
     "headers": {"Last-Event-ID?": "resume after this frame"},
     "events": {"frame": "Frame, SSE id = cycle", "end": {"run_id": "string", "stop_reason": "string",
                                                          "converged": "bool", "frames": "integer",
                                                          "error": "string|null"}}},
    {"method": "POST", "path": "/runs/{rid}/perturb", "status": 202, "request": "Perturbation",
     "response": {"run_id": "string", "queued": "integer", "next_cycle": "integer"}},
    {"method": "POST", "path": "/runs/{rid}/feedback",
     "request": {"rating?": "1-5", "verdict?": "DO|DONT", "comment?": "string"}, "response": "CatalogueEntry"},
    {"method": "GET", "path": "/catalogue",
     "query": {"verdict?": "DO|DONT", "offset?": "integer", "limit?": "1-500 (default 50)"},
     "response": {"entries": "[CatalogueEntry]", "total": "integer", "offset": "integer", "limit": "integer"}},
    {"method": "GET", "path": "/catalogue/{id}", "response": "CatalogueEntry"}
  ]
})json");
    return schema;
}

}  // namespace flowscribe::gateway
