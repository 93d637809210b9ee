"""Main FastAPI application for the sideband chain simulator."""

import logging

import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from sidebandlab.api import routes
from sidebandlab.config import DEFAULT_CONFIG, RunConfig

logger = logging.getLogger(__name__)


def create_app(run_config: RunConfig | None = None) -> FastAPI:
    """Create and configure the FastAPI application.

    Args:
        run_config: Configuration to serve; defaults to the bundled setup preset

    Returns:
        Configured FastAPI app instance
    """
    app = FastAPI(title="sidebandlab", version="0.1.0")
    setup_cors(app)
    setup_routes(app, run_config or DEFAULT_CONFIG)
    return app


def setup_cors(app: FastAPI) -> None:
    """Configure CORS middleware for external plotting front ends.

    Args:
        app: FastAPI application instance
    """
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )


def setup_routes(app: FastAPI, run_config: RunConfig) -> None:
    """Setup API routes with the active configuration.

    Args:
        app: FastAPI application instance
        run_config: Configuration the routes compute with
    """
    routes.set_config(run_config)
    app.include_router(routes.router)
    app.include_router(routes.opa_router)
    logger.info("serving chain with %d cavities", len(run_config.cavities()))


# Create the FastAPI app
app = create_app()


if __name__ == "__main__":
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True, log_level="info")
