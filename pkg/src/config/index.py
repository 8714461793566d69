import os
from dotenv import load_dotenv

from src.utils.errors import CredentialError

load_dotenv()

appConfig = {
    "github_token": os.getenv("GITHUB_TOKEN"),
    "github_api_url": os.getenv("GITHUB_API_URL", "https://api.github.com"),
    "log_level": os.getenv("LOG_LEVEL", "INFO"),
    "fetch_workers": int(os.getenv("FETCH_WORKERS", "4")),
    "fetch_max_retries": int(os.getenv("FETCH_MAX_RETRIES", "3")),
    # Longest single wait on a rate-limit reset before the retry counts against the budget.
    "fetch_max_wait_seconds": float(os.getenv("FETCH_MAX_WAIT_SECONDS", "900")),
    "default_bot_patterns": [
        "dependabot*",
        "*+bot@snyk.io",
        "*[[]bot[]]*",
    ],
}


def require_github_token() -> str:
    token = appConfig["github_token"]
    if not token:
        raise CredentialError("GITHUB_TOKEN must be set in .env file")
    return token
