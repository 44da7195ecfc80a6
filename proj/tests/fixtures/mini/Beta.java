package mini;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class Beta {
  private static final Logger LOG = LoggerFactory.getLogger(Beta.class);
  private Alpha alpha;

  public void run(String taskId) {
    LOG.info("running task " + taskId);
    alpha.start();
    finish(taskId);
  }

  private void finish(String taskId) {
    LOG.info("finished task " + taskId);
  }

  public int estimate() {
    return 42;
  }
}
