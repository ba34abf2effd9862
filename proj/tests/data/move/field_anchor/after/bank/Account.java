package bank;

public class Account {
    String owner;
    long balance;
    String currency;

    String summary() {
        return this.owner + ": " + this.balance + " " + this.currency;
    }
}
