import hashlib
import logging
import os

logger = logging.getLogger(__name__)


class FsCache:
    """
    Content-addressed cache of generated files (datasets, sidecars).

    A file is named by the sha1 of the package version and of the key that
    describes how it was produced (e.g. a serialized generation config).
    Files are built under a temporary name and renamed when complete, so an
    interrupted build never leaves a valid-looking entry behind.
    """

    def __init__(self, cache_dir, version):
        os.makedirs(cache_dir, exist_ok=True)
        self.cache_dir = cache_dir
        self.prefix = "mbdno-{}/".format(version).encode()

    def path_for(self, key, suffix):
        if isinstance(key, str):
            key = key.encode()
        digest = hashlib.sha1(self.prefix + key).hexdigest()
        return os.path.join(self.cache_dir, "cache.{}.{}".format(digest, suffix))

    def ensure(self, key, suffix, build):
        """
        Returns the path of the entry for `key`, calling `build(path)` to
        write it when missing.
        """
        path = self.path_for(key, suffix)
        if os.path.isfile(path):
            logger.debug("Cache hit: %s", path)
            return path
        logger.info("Cache miss, building %s", path)
        partial = path + ".partial"
        try:
            build(partial)
            os.replace(partial, path)
        finally:
            if os.path.exists(partial):
                os.remove(partial)
        return path

