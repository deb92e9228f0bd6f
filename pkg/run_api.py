#!/usr/bin/env python3
"""
Startup script for the Smooth Copula Bootstrap API
"""
import sys
import uvicorn
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config.settings import get_settings


def main():
    """Serve api.main:app with host, port and log level from the settings"""
    settings = get_settings()
    base = f"http://localhost:{settings.api_port}"
    print("Starting Smooth Copula Bootstrap API...")
    print(f"Endpoints under {base}/api (quadrature order {settings.gh_order}, {settings.threads} thread(s))")
    print(f"Interactive docs: {base}/docs")
    print("-" * 50)

    uvicorn.run(
        "api.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=True,
        log_level=settings.log_level.lower(),
        access_log=True,
    )


if __name__ == "__main__":
    main()
