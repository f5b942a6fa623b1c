"""
Content-Addressed Result Cache with Joblib
Stores finished enumeration outcomes and group orders under SHA-256 keys of
their inputs
"""

import joblib
import hashlib
from pathlib import Path
from typing import Any, Dict, List, Optional
import logging
import json

logger = logging.getLogger(__name__)

CATEGORIES = ("enumerations", "group_orders")


class CacheManager:
    """Joblib cache keyed by a hash of the computation's canonical inputs"""

    def __init__(self, cache_dir: str):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        for category in CATEGORIES:
            (self.cache_dir / category).mkdir(exist_ok=True)

        self.stats = {
            "hits": 0,
            "misses": 0,
            "updates": 0,
            "no_changes": 0
        }

        logger.info(f"CacheManager initialized at {self.cache_dir}")

    @staticmethod
    def compute_key(material: Any) -> str:
        """SHA256 of the JSON form of the key material"""
        text = json.dumps(material, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    def _get_cache_path(self, category: str, key: str) -> Path:
        if category not in CATEGORIES:
            raise ValueError(f"unknown cache category {category!r}")
        return self.cache_dir / category / f"{key}.joblib"

    def _get_metadata_path(self, category: str, key: str) -> Path:
        return self.cache_dir / category / f"{key}_meta.json"

    def get(self, category: str, key: str) -> Optional[Any]:
        cache_path = self._get_cache_path(category, key)
        if not cache_path.exists():
            self.stats["misses"] += 1
            return None

        try:
            data = joblib.load(cache_path)
            self.stats["hits"] += 1
            logger.debug(f"Cache hit: {category}/{key[:12]}")
            return data
        except Exception as e:
            logger.error(f"Failed to load cache {category}/{key[:12]}: {e}")
            self.stats["misses"] += 1
            return None

    def set(self, category: str, key: str, data: Any, force: bool = False) -> bool:
        """
        Store data unless an identical payload is already cached

        Returns:
            True if written, False if unchanged or the write failed
        """
        cache_path = self._get_cache_path(category, key)
        meta_path = self._get_metadata_path(category, key)
        new_hash = self.compute_key(data)

        if not force and cache_path.exists() and meta_path.exists():
            try:
                with open(meta_path, 'r') as f:
                    if json.load(f).get('hash') == new_hash:
                        self.stats["no_changes"] += 1
                        return False
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Could not compare hashes for {category}/{key[:12]}: {e}")

        try:
            joblib.dump(data, cache_path, compress=3)
            metadata = {
                'hash': new_hash,
                'category': category,
                'key': key,
                'size_bytes': cache_path.stat().st_size
            }
            with open(meta_path, 'w') as f:
                json.dump(metadata, f, indent=2, sort_keys=True)

            self.stats["updates"] += 1
            logger.info(f"Cache updated: {category}/{key[:12]}")
            return True
        except OSError as e:
            logger.error(f"Failed to save cache {category}/{key[:12]}: {e}")
            return False

    def clear_category(self, category: str) -> int:
        if category not in CATEGORIES:
            raise ValueError(f"unknown cache category {category!r}")
        category_path = self.cache_dir / category
        count = 0
        if category_path.exists():
            for file in category_path.glob("*"):
                file.unlink()
                count += 1
        logger.info(f"Cleared {count} items from {category}")
        return count

    def clear_all_cache(self) -> int:
        return sum(self.clear_category(category) for category in CATEGORIES)

    # Specialized accessors

    @staticmethod
    def enumeration_key(presentation_text: str, subgroup: List[str], strategy: str,
                        limits: Dict[str, Any]) -> str:
        return CacheManager.compute_key({
            "presentation": presentation_text,
            "subgroup": subgroup,
            "strategy": strategy,
            "limits": limits,
        })

    def get_enumeration(self, key: str) -> Optional[Dict]:
        return self.get("enumerations", key)

    def set_enumeration(self, key: str, outcome: Dict) -> bool:
        if outcome.get("status") != "completed":
            return False
        return self.set("enumerations", key, outcome)

    def get_group_order(self, r: int, generators: List[str]) -> Optional[int]:
        return self.get("group_orders", self.compute_key({"r": r, "generators": generators}))

    def set_group_order(self, r: int, generators: List[str], order: int) -> bool:
        return self.set("group_orders", self.compute_key({"r": r, "generators": generators}), order)

    def get_cache_statistics(self) -> Dict:
        category_stats = {}
        for category in CATEGORIES:
            items = list((self.cache_dir / category).glob("*.joblib"))
            category_stats[category] = {
                "count": len(items),
                "size_bytes": sum(f.stat().st_size for f in items)
            }

        lookups = self.stats["hits"] + self.stats["misses"]
        hit_rate = self.stats["hits"] / lookups * 100 if lookups else 0
        return {
            "cache_directory": str(self.cache_dir),
            "categories": category_stats,
            "performance": {
                "cache_hits": self.stats["hits"],
                "cache_misses": self.stats["misses"],
                "hit_rate": round(hit_rate, 2),
                "updates": self.stats["updates"],
                "skipped_updates": self.stats["no_changes"]
            }
        }
