package dfs;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class StorageChecker {
  private static final Logger LOG = LoggerFactory.getLogger(StorageChecker.class);
  private boolean degraded;

  public void checkDirs(int dirs) {
    for (int i = 0; i < dirs; i = i + 1) {
      if (degraded) {
        LOG.error("Storage directory {} failed health check", i);
      } else {
        LOG.debug("storage dir {} healthy", i);
      }
    }
  }
}
