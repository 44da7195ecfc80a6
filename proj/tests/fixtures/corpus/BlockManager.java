package dfs;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class BlockManager {
  private static final Logger LOG = LoggerFactory.getLogger(BlockManager.class);
  private ReplicaMap replicas;

  public void addBlock(String blockId, int size) {
    if (blockId == null) {
      LOG.warn("null block id rejected");
    } else {
      LOG.info("Received block {} of size {}", blockId, size);
      replicas.add(blockId);
    }
  }

  public void removeBlock(String blockId) {
    LOG.info("Deleting block {}", blockId);
    replicas.remove(blockId);
  }
}
