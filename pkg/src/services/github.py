import logging
import time

import requests
from requests.exceptions import ConnectionError, Timeout

from src.config.index import appConfig
from src.utils.errors import ArgumentError, CredentialError, TransientError

logger = logging.getLogger(__name__)


class GitHubClient:
    """Paginating GitHub REST client with rate-limit waits and exponential backoff."""

    def __init__(
        self,
        token: str,
        base_url: str | None = None,
        session: requests.Session | None = None,
        max_retries: int | None = None,
        max_wait_seconds: float | None = None,
        sleep=time.sleep,
    ):
        self.base_url = (base_url or appConfig["github_api_url"]).rstrip("/")
        self.headers = {
            "Authorization": f"Bearer {token}",
            "Accept": "application/vnd.github+json",
            "User-Agent": "orgcoupling-fetcher",
        }
        self._session = session or requests.Session()
        self.max_retries = max_retries if max_retries is not None else appConfig["fetch_max_retries"]
        self.max_wait_seconds = (
            max_wait_seconds if max_wait_seconds is not None else appConfig["fetch_max_wait_seconds"]
        )
        self._sleep = sleep

    def _rate_limit_wait(self, response) -> float | None:
        """Seconds until the rate limit resets, or None when the response is not rate limited."""
        if response.status_code not in (403, 429):
            return None
        retry_after = response.headers.get("Retry-After")
        if retry_after and retry_after.isdigit():
            return float(retry_after)
        if response.headers.get("X-RateLimit-Remaining") == "0":
            reset = response.headers.get("X-RateLimit-Reset")
            if reset and reset.isdigit():
                return max(0.0, int(reset) - time.time() + 1)
            return 60.0
        return 60.0 if response.status_code == 429 else None

    def get(self, endpoint: str, params: dict | None = None, timeout: float = 30):
        """GET one page; returns the response after retrying rate limits and transient failures."""
        url = endpoint if endpoint.startswith("http") else f"{self.base_url}{endpoint}"

        last_wait = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self._session.get(url, headers=self.headers, params=params, timeout=timeout)
            except (Timeout, ConnectionError) as e:
                if attempt >= self.max_retries:
                    raise TransientError(f"Failed to reach {url}: {str(e)}") from e
                backoff = 2**attempt
                logger.warning("Request to %s failed (%s), retrying in %ds", url, e, backoff)
                self._sleep(backoff)
                continue

            if response.status_code == 401:
                raise CredentialError(f"GitHub rejected the token for {url}")

            wait = self._rate_limit_wait(response)
            if wait is not None:
                last_wait = wait
                if attempt >= self.max_retries:
                    break
                logger.warning("Rate limited on %s, waiting %.0fs", url, wait)
                self._sleep(min(wait, self.max_wait_seconds))
                continue

            if response.status_code >= 500:
                if attempt >= self.max_retries:
                    raise TransientError(f"GitHub returned {response.status_code} for {url}")
                self._sleep(2**attempt)
                continue

            if response.status_code == 403:
                raise CredentialError(f"Token lacks read access to {url}")
            if response.status_code >= 400:
                raise ArgumentError(f"GitHub returned {response.status_code} for {url}; check the repository name")
            return response

        raise TransientError(f"Rate limit still exhausted for {url}", retry_after=last_wait)

    def paginate(self, endpoint: str, params: dict | None = None):
        """Yield items across every page, following `Link: rel="next"`."""
        params = {"per_page": 100, **(params or {})}
        url = endpoint
        while url:
            response = self.get(url, params=params)
            payload = response.json()
            items = payload if isinstance(payload, list) else [payload]
            for item in items:
                yield item
            url = response.links.get("next", {}).get("url")
            # The next link already carries the query string.
            params = None
