"""Shared HTTP plumbing: the error body contract and bearer-token checks.

Every error response carries the same JSON shape:

    {"code": <stable machine string>, "message": <human text>, "details": {...}}

Codes used across the service:
    invalid-request      malformed body or query parameter (400)
    bad-message-hash     message_hash is not 64 hex characters (400)
    unknown-suite        requested suite is not served here (400)
    unauthenticated      missing or malformed Authorization header (401)
    forbidden            valid credentials for a different principal (403)
    unknown-user         user id not registered (404)
    unknown-session      session id not found (404)
    wrong-state          operation not allowed in the session's state (409)
    protocol-violation   a node refused the contribution (409)
    protocol-failure     signing failed mid-flight, session aborted (500)
    qtsp-unreachable     a QTSP peer did not answer (502)
    ledger-unavailable   ledger write failed, session fails closed (503)
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse


class ApiError(Exception):
    """Raised by handlers; rendered by the installed exception handler."""

    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


def error_body(code: str, message: str, details: dict | None = None) -> dict:
    return {"code": code, "message": message, "details": details or {}}


def install_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content=error_body(exc.code, exc.message, exc.details),
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content=error_body(
                "invalid-request",
                "request body or parameters failed validation",
                {"errors": [str(e.get("msg", e)) for e in exc.errors()]},
            ),
        )


def require_bearer(authorization: str | None) -> str:
    """Extract the token or fail with 401."""
    if not authorization or not authorization.startswith("Bearer "):
        raise ApiError(401, "unauthenticated", "expected an Authorization: Bearer header")
    return authorization[len("Bearer ") :]
