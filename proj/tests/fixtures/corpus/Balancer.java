package dfs;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class Balancer {
  private static final Logger LOG = LoggerFactory.getLogger(Balancer.class);
  private BlockMover mover;
  private MetricsCollector metrics;
  private boolean unbalanced;
  private int moved;

  public void run() {
    LOG.info("balancer iteration starting");
    while (unbalanced) {
      mover.move("blk-0", "rack-a", "rack-b");
    }
    metrics.snapshot();
    LOG.info("balancer moved {} blocks this iteration", moved);
    LOG.info("balancer iteration complete");
  }
}
