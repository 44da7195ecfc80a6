package mini;

public class Gamma {
  private int total;

  public void accumulate(int amount) {
    total = total + amount;
  }

  public int total() {
    return total;
  }
}
